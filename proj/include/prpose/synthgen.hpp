// Seeded synthetic benchmark generation: skeleton pose sampling, pinhole
// projection, heteroscedastic 2D detector noise, and the dataset file format.
//
// Dataset files are line-delimited text. Header:
//   prpose-dataset v1 joints=<V> skeleton=<hex hash> count=<N>
// followed by one record per line:
//   <sample_id> <3V gt floats, mm> <2V clean floats> <2V detected floats>
//   <V occlusion flags as 0/1>
// Floats are printed with 17 significant digits and round-trip exactly.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "prpose/core.hpp"
#include "prpose/rng.hpp"

namespace prpose {

// ---------------------------------------------------------------------------
// Types

/// Normalized pinhole camera looking down +Z at a skeleton root placed
/// subject_distance millimeters away.
struct Camera {
  double focal = 1.0;                      // normalized focal length
  std::array<double, 2> principal = {0, 0};
  double subject_distance_mm = 4000.0;

  void validate() const {
    if (!(focal > 0)) throw ValidationError("Camera: focal must be > 0");
    if (!(subject_distance_mm > 0))
      throw ValidationError("Camera: subject distance must be > 0");
  }
};

/// Per-joint baseline noise plus limb-group occlusion events that inflate
/// the noise of whole limbs at once.
struct NoiseProfile {
  std::vector<double> base_sigma;           // per joint, normalized units
  double occlusion_prob = 0.0;              // per limb group, per sample
  double occlusion_multiplier = 1.0;        // applied to occluded joints
  std::vector<std::vector<int>> limb_groups;

  void validate(int joint_count) const {
    if (static_cast<int>(base_sigma.size()) != joint_count)
      throw ValidationError("NoiseProfile: base_sigma length != joint count");
    for (double s : base_sigma)
      if (!(s >= 0) || !std::isfinite(s))
        throw ValidationError("NoiseProfile: sigma must be >= 0");
    if (!(occlusion_prob >= 0.0 && occlusion_prob <= 1.0))
      throw ValidationError("NoiseProfile: occlusion_prob outside [0, 1]");
    if (!(occlusion_multiplier >= 1.0))
      throw ValidationError("NoiseProfile: multiplier must be >= 1");
    for (const auto& group : limb_groups)
      for (int j : group)
        if (j < 0 || j >= joint_count)
          throw ValidationError("NoiseProfile: limb group joint out of range");
  }
};

struct DatasetRecord {
  std::int64_t sample_id = 0;
  Pose3D gt_pose3d;
  Pose2D clean_pose2d;
  Pose2D detected_pose2d;   // the model input
  std::vector<std::uint8_t> occlusion_mask;
};

struct Dataset {
  int joint_count = 0;
  std::uint64_t skeleton_hash = 0;
  std::vector<DatasetRecord> records;
};

/// Sampling range for one bone direction: deviation from the rest direction
/// by a polar angle in [polar_min, polar_max] at an azimuth in
/// [azimuth_min, azimuth_max] around it.
struct JointLimit {
  std::array<double, 3> rest_direction = {0, 1, 0};
  double polar_min = 0.0;
  double polar_max = 0.0;
  double azimuth_min = 0.0;
  double azimuth_max = 2.0 * 3.14159265358979323846;
};

// ---------------------------------------------------------------------------
// Pose sampling

namespace detail {

inline std::array<double, 3> normalize3(const std::array<double, 3>& v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (!(n > 0)) throw ValidationError("zero-length direction");
  return {v[0] / n, v[1] / n, v[2] / n};
}

inline std::array<double, 3> cross3(const std::array<double, 3>& a,
                                    const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

// Children-first traversal order so parents are placed before children.
inline std::vector<int> topological_order(const Skeleton& skel) {
  const int v = skel.joint_count();
  std::vector<std::vector<int>> children(v);
  for (int j = 1; j < v; ++j) children[skel.parent(j)].push_back(j);
  std::vector<int> order;
  order.reserve(v);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    order.push_back(cur);
    for (auto it = children[cur].rbegin(); it != children[cur].rend(); ++it)
      stack.push_back(*it);
  }
  return order;
}

}  // namespace detail

/// Draws a random pose: every bone keeps its exact length while its
/// direction deviates from the rest direction within the joint's limits.
/// Deterministic given the rng state; zero-width limits reproduce the rest
/// pose bit-identically.
inline Pose3D sample_pose(const Skeleton& skeleton,
                          const std::vector<JointLimit>& limits, Rng& rng) {
  if (limits.empty())
    throw ConfigError("sample_pose: no joint limits configured");
  if (static_cast<int>(limits.size()) != skeleton.joint_count())
    throw ConfigError("sample_pose: limits must cover every joint");

  const int v = skeleton.joint_count();
  std::vector<std::array<double, 3>> coords(v, {0, 0, 0});
  for (int j : detail::topological_order(skeleton)) {
    if (j == 0) continue;  // root stays at the origin
    const JointLimit& lim = limits[j];
    const auto rest = detail::normalize3(lim.rest_direction);
    // Deterministic orthonormal frame around the rest direction.
    const std::array<double, 3> helper =
        std::abs(rest[0]) < 0.9 ? std::array<double, 3>{1, 0, 0}
                                : std::array<double, 3>{0, 1, 0};
    const auto e1 = detail::normalize3(detail::cross3(helper, rest));
    const auto e2 = detail::cross3(rest, e1);

    const double theta = rng.uniform(lim.polar_min, lim.polar_max);
    const double phi = rng.uniform(lim.azimuth_min, lim.azimuth_max);
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cp = std::cos(phi), sp = std::sin(phi);
    std::array<double, 3> dir = {
        ct * rest[0] + st * (cp * e1[0] + sp * e2[0]),
        ct * rest[1] + st * (cp * e1[1] + sp * e2[1]),
        ct * rest[2] + st * (cp * e1[2] + sp * e2[2])};
    dir = detail::normalize3(dir);

    const auto& parent = coords[skeleton.parent(j)];
    const double len = skeleton.bone_length(j);
    coords[j] = {parent[0] + len * dir[0], parent[1] + len * dir[1],
                 parent[2] + len * dir[2]};
  }
  return Pose3D(std::move(coords));
}

// ---------------------------------------------------------------------------
// Projection and corruption

/// Pinhole projection of a root-relative pose placed subject_distance in
/// front of the camera: u = f*X/(Z+d) + u0.
inline Pose2D project(const Pose3D& pose, const Camera& camera) {
  camera.validate();
  std::vector<std::array<double, 2>> out(pose.joint_count());
  for (int j = 0; j < pose.joint_count(); ++j) {
    const auto& p = pose.joint(j);
    const double depth = p[2] + camera.subject_distance_mm;
    if (!(depth > 0))
      throw ProjectionError("project: joint " + std::to_string(j) +
                            " at or behind the camera plane");
    out[j] = {camera.focal * p[0] / depth + camera.principal[0],
              camera.focal * p[1] / depth + camera.principal[1]};
  }
  return Pose2D(std::move(out));
}

/// Adds independent zero-mean Gaussian noise per coordinate; joints in limb
/// groups drawn occluded get their sigma multiplied. Draw order: one uniform
/// per limb group, then per joint the u and v variates.
inline std::pair<Pose2D, std::vector<std::uint8_t>> corrupt_2d(
    const Pose2D& pose, const NoiseProfile& profile, Rng& rng) {
  profile.validate(pose.joint_count());
  const int v = pose.joint_count();
  std::vector<std::uint8_t> mask(v, 0);
  for (const auto& group : profile.limb_groups) {
    const bool occluded = rng.uniform() < profile.occlusion_prob;
    if (occluded)
      for (int j : group) mask[j] = 1;
  }
  std::vector<std::array<double, 2>> coords(v);
  for (int j = 0; j < v; ++j) {
    const double sigma =
        profile.base_sigma[j] * (mask[j] ? profile.occlusion_multiplier : 1.0);
    coords[j] = {pose.joint(j)[0] + sigma * rng.normal(),
                 pose.joint(j)[1] + sigma * rng.normal()};
  }
  return {Pose2D(std::move(coords)), std::move(mask)};
}

// ---------------------------------------------------------------------------
// Dataset generation

struct DatasetConfig {
  Skeleton skeleton;
  std::vector<JointLimit> limits;
  Camera camera;
  NoiseProfile noise;
  std::int64_t sample_count = 0;  // P
  double train_fraction = 0.8;
  std::uint64_t seed = 1;

  void validate() const {
    if (sample_count < 1) throw ConfigError("DatasetConfig: P must be >= 1");
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
      throw ConfigError("DatasetConfig: train_fraction outside [0, 1]");
    camera.validate();
    noise.validate(skeleton.joint_count());
    if (camera.subject_distance_mm <= skeleton.max_reach())
      throw ConfigError(
          "DatasetConfig: subject distance must exceed skeleton reach");
  }
};

inline DatasetRecord generate_record(const DatasetConfig& config,
                                     std::int64_t sample_id) {
  Rng pose_rng = Rng::keyed(config.seed, static_cast<std::uint64_t>(sample_id), 0);
  Rng noise_rng = Rng::keyed(config.seed, static_cast<std::uint64_t>(sample_id), 1);
  DatasetRecord rec;
  rec.sample_id = sample_id;
  rec.gt_pose3d = sample_pose(config.skeleton, config.limits, pose_rng);
  rec.clean_pose2d = project(rec.gt_pose3d, config.camera);
  auto [detected, mask] = corrupt_2d(rec.clean_pose2d, config.noise, noise_rng);
  rec.detected_pose2d = std::move(detected);
  rec.occlusion_mask = std::move(mask);
  return rec;
}

inline std::vector<DatasetRecord> generate_records(const DatasetConfig& config) {
  config.validate();
  std::vector<DatasetRecord> records;
  records.reserve(static_cast<std::size_t>(config.sample_count));
  for (std::int64_t id = 0; id < config.sample_count; ++id)
    records.push_back(generate_record(config, id));
  return records;
}

// ---------------------------------------------------------------------------
// Dataset file format

namespace detail {

inline void append_double(std::string& out, double d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  out += buf;
}

}  // namespace detail

inline std::string serialize_dataset(const std::vector<DatasetRecord>& records,
                                     int joint_count,
                                     std::uint64_t skeleton_hash) {
  std::string out = "prpose-dataset v1 joints=" + std::to_string(joint_count) +
                    " skeleton=" + hash_hex(skeleton_hash) +
                    " count=" + std::to_string(records.size()) + "\n";
  for (const auto& rec : records) {
    if (rec.gt_pose3d.joint_count() != joint_count ||
        rec.clean_pose2d.joint_count() != joint_count ||
        rec.detected_pose2d.joint_count() != joint_count ||
        static_cast<int>(rec.occlusion_mask.size()) != joint_count)
      throw ValidationError("serialize_dataset: record joint count mismatch");
    out += std::to_string(rec.sample_id);
    for (double d : rec.gt_pose3d.flat()) {
      out += ' ';
      detail::append_double(out, d);
    }
    for (double d : rec.clean_pose2d.flat()) {
      out += ' ';
      detail::append_double(out, d);
    }
    for (double d : rec.detected_pose2d.flat()) {
      out += ' ';
      detail::append_double(out, d);
    }
    for (std::uint8_t m : rec.occlusion_mask) {
      out += ' ';
      out += m ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

inline Dataset parse_dataset(const std::string& text, const std::string& what) {
  std::istringstream in(text);
  std::string tag, version;
  in >> tag >> version;
  if (!in || tag != "prpose-dataset")
    throw IoError(what + ": not a dataset file");
  if (version != "v1")
    throw IoError(what + ": unsupported format version " + version);
  std::string joints_field, skeleton_field, count_field;
  in >> joints_field >> skeleton_field >> count_field;
  if (!in || joints_field.rfind("joints=", 0) != 0 ||
      skeleton_field.rfind("skeleton=", 0) != 0 ||
      count_field.rfind("count=", 0) != 0)
    throw IoError(what + ": malformed header");

  Dataset ds;
  ds.joint_count = std::stoi(joints_field.substr(7));
  if (ds.joint_count < 2) throw IoError(what + ": bad joint count");
  ds.skeleton_hash =
      std::stoull(skeleton_field.substr(9), nullptr, 16);
  const std::int64_t count = std::stoll(count_field.substr(6));

  const int v = ds.joint_count;
  ds.records.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    DatasetRecord rec;
    in >> rec.sample_id;
    if (!in)
      throw IoError(what + ": truncated at record " + std::to_string(i));
    auto read_doubles = [&](int n) {
      std::vector<double> vals(n);
      for (int k = 0; k < n; ++k) {
        in >> vals[k];
        if (!in)
          throw IoError(what + ": truncated at record " + std::to_string(i));
      }
      return vals;
    };
    try {
      rec.gt_pose3d = Pose3D::from_flat(read_doubles(3 * v));
      rec.clean_pose2d = Pose2D::from_flat(read_doubles(2 * v));
      rec.detected_pose2d = Pose2D::from_flat(read_doubles(2 * v));
    } catch (const ValidationError& e) {
      throw IoError(what + ": record " + std::to_string(i) + ": " + e.what());
    }
    rec.occlusion_mask.resize(v);
    for (int k = 0; k < v; ++k) {
      int flag;
      in >> flag;
      if (!in || (flag != 0 && flag != 1))
        throw IoError(what + ": bad occlusion flag at record " +
                      std::to_string(i));
      rec.occlusion_mask[k] = static_cast<std::uint8_t>(flag);
    }
    ds.records.push_back(std::move(rec));
  }
  std::string leftover;
  if (in >> leftover)
    throw IoError(what + ": trailing content after " + std::to_string(count) +
                  " records");
  return ds;
}

inline void write_dataset(const std::string& path,
                          const std::vector<DatasetRecord>& records,
                          int joint_count, std::uint64_t skeleton_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  const std::string data = serialize_dataset(records, joint_count, skeleton_hash);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_dataset(text, path);
}

/// Number of training records for a given config split.
inline std::int64_t train_split_count(std::int64_t sample_count,
                                      double train_fraction) {
  return std::llround(static_cast<double>(sample_count) * train_fraction);
}

/// Generates the full record set and writes the train/test files.
inline void generate_dataset(const DatasetConfig& config,
                             const std::string& train_path,
                             const std::string& test_path) {
  const std::vector<DatasetRecord> all = generate_records(config);
  const auto n_train = static_cast<std::size_t>(
      train_split_count(config.sample_count, config.train_fraction));
  std::vector<DatasetRecord> train(all.begin(), all.begin() + n_train);
  std::vector<DatasetRecord> test(all.begin() + n_train, all.end());
  const std::uint64_t skel_hash = config.skeleton.hash();
  write_dataset(train_path, train, config.skeleton.joint_count(), skel_hash);
  write_dataset(test_path, test, config.skeleton.joint_count(), skel_hash);
}

inline std::uint64_t dataset_hash(const Dataset& ds) {
  return fnv1a64(serialize_dataset(ds.records, ds.joint_count, ds.skeleton_hash));
}

// ---------------------------------------------------------------------------
// Reference benchmark

/// 16-joint skeleton: pelvis-rooted torso chain plus two arms and two legs.
inline Skeleton reference_skeleton() {
  return Skeleton(
      {-1, 0, 1, 2, 2, 4, 5, 2, 7, 8, 0, 10, 11, 0, 13, 14},
      {0, 150, 150, 120, 180, 280, 250, 180, 280, 250, 130, 440, 430, 130,
       440, 430},
      {"pelvis", "spine", "thorax", "head", "l_shoulder", "l_elbow",
       "l_wrist", "r_shoulder", "r_elbow", "r_wrist", "l_hip", "l_knee",
       "l_ankle", "r_hip", "r_knee", "r_ankle"});
}

inline std::vector<std::vector<int>> reference_limb_groups() {
  return {{4, 5, 6}, {7, 8, 9}, {10, 11, 12}, {13, 14, 15}};
}

inline std::vector<JointLimit> reference_limits() {
  const double pi = 3.14159265358979323846;
  std::vector<JointLimit> limits(16);
  auto set = [&limits](int j, std::array<double, 3> rest, double polar_max) {
    limits[j].rest_direction = rest;
    limits[j].polar_min = 0.0;
    limits[j].polar_max = polar_max;
  };
  set(1, {0, 1, 0}, 0.15);    // spine
  set(2, {0, 1, 0}, 0.15);    // thorax
  set(3, {0, 1, 0}, 0.35);    // head
  set(4, {1, 0, 0}, 0.25);    // l_shoulder
  set(5, {0.3, -1, 0}, 0.9);  // l_elbow
  set(6, {0, -1, 0}, 1.1);    // l_wrist
  set(7, {-1, 0, 0}, 0.25);   // r_shoulder
  set(8, {-0.3, -1, 0}, 0.9); // r_elbow
  set(9, {0, -1, 0}, 1.1);    // r_wrist
  set(10, {1, -0.3, 0}, 0.2); // l_hip
  set(11, {0, -1, 0}, 0.7);   // l_knee
  set(12, {0, -1, 0.2}, 0.8); // l_ankle
  set(13, {-1, -0.3, 0}, 0.2);// r_hip
  set(14, {0, -1, 0}, 0.7);   // r_knee
  set(15, {0, -1, 0.2}, 0.8); // r_ankle
  for (auto& l : limits) {
    l.azimuth_min = 0.0;
    l.azimuth_max = 2.0 * pi;
  }
  return limits;
}

/// Benchmark defaults: 22 000 samples split 20 000 / 2 000, base sigma 0.005
/// with 4x noise on occluded limbs drawn at probability 0.3 per limb.
inline DatasetConfig reference_dataset_config(std::uint64_t seed = 1) {
  DatasetConfig config{
      .skeleton = reference_skeleton(),
      .limits = reference_limits(),
      .camera = Camera{1.0, {0.0, 0.0}, 4000.0},
      .noise =
          NoiseProfile{std::vector<double>(16, 0.005), 0.3, 4.0,
                       reference_limb_groups()},
      .sample_count = 22000,
      .train_fraction = 10.0 / 11.0,
      .seed = seed,
  };
  return config;
}

}  // namespace prpose
