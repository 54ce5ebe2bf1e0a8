// Single-hypothesis 2D-to-3D lifter: a residual MLP regressing root-relative
// 3D joints from a flattened 2D pose, trained with mean L1 loss.
//
// The network operates in meters internally (targets scaled by 1e-3) so that
// Adam's unit-scale steps reach millimeter-range outputs quickly; lift()
// converts back to millimeters at the boundary.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "prpose/core.hpp"
#include "prpose/nn.hpp"
#include "prpose/synthgen.hpp"

namespace prpose {

constexpr double kLifterOutputScaleMm = 1000.0;  // network unit -> mm

struct LifterTrainConfig {
  int hidden_dim = 256;
  int block_count = 2;
  int epochs = 200;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double lr_decay_factor = 0.1;
  int lr_decay_epoch = 150;
  std::uint64_t seed = 1;
};

struct LifterModel {
  Network network;  // input 2V, output 3V; frozen once trained
  std::uint64_t dataset_hash = 0;
  int epochs_trained = 0;
  double final_train_loss = 0.0;           // mean L1, network units
  std::vector<double> epoch_losses;
};

namespace detail {

inline Eigen::MatrixXd inputs_from_records(
    const std::vector<DatasetRecord>& records) {
  const int v = records.front().detected_pose2d.joint_count();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(records.size()), 2 * v);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::vector<double> flat = records[i].detected_pose2d.flat();
    for (int k = 0; k < 2 * v; ++k)
      x(static_cast<Eigen::Index>(i), k) = flat[static_cast<std::size_t>(k)];
  }
  return x;
}

inline Eigen::MatrixXd targets_from_records(
    const std::vector<DatasetRecord>& records, double scale) {
  const int v = records.front().gt_pose3d.joint_count();
  Eigen::MatrixXd y(static_cast<Eigen::Index>(records.size()), 3 * v);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::vector<double> flat = records[i].gt_pose3d.flat();
    for (int k = 0; k < 3 * v; ++k)
      y(static_cast<Eigen::Index>(i), k) =
          flat[static_cast<std::size_t>(k)] * scale;
  }
  return y;
}

inline int dataset_joint_count(const std::vector<DatasetRecord>& records) {
  if (records.empty()) throw ValidationError("dataset is empty");
  const int v = records.front().gt_pose3d.joint_count();
  for (const auto& rec : records)
    if (rec.gt_pose3d.joint_count() != v ||
        rec.detected_pose2d.joint_count() != v)
      throw ValidationError("dataset joint counts disagree");
  return v;
}

}  // namespace detail

/// Trains the lifter on (detected 2D, ground-truth 3D) pairs and returns it
/// frozen. Deterministic given the config seed.
inline LifterModel train_lifter(const std::vector<DatasetRecord>& train,
                                const LifterTrainConfig& config,
                                std::uint64_t dataset_hash = 0) {
  const int v = detail::dataset_joint_count(train);
  const Eigen::MatrixXd x = detail::inputs_from_records(train);
  const Eigen::MatrixXd y =
      detail::targets_from_records(train, 1.0 / kLifterOutputScaleMm);

  NetSpec spec{2 * v, 3 * v, config.hidden_dim, config.block_count,
               Activation::kReLU};
  Rng init_rng = Rng::keyed(config.seed, 0x11F7E2u);
  LifterModel model;
  model.network = Network::random_init(spec, init_rng);

  TrainSchedule schedule;
  schedule.epochs = config.epochs;
  schedule.batch_size = config.batch_size;
  schedule.learning_rate = config.learning_rate;
  schedule.lr_decay_factor = config.lr_decay_factor;
  schedule.lr_decay_epoch = config.lr_decay_epoch;
  schedule.seed = config.seed;
  TrainResult result =
      train_network(model.network, x, y, LossKind::kL1, schedule);

  model.network.freeze();
  model.dataset_hash = dataset_hash;
  model.epochs_trained = config.epochs;
  model.epoch_losses = std::move(result.epoch_losses);
  model.final_train_loss = model.epoch_losses.back();
  return model;
}

/// Raw batched inference: rows of flattened 2D poses in, rows of flattened
/// 3D poses in millimeters out (not yet root-centered).
inline Eigen::MatrixXd lift_batch_raw(const LifterModel& model,
                                      const Eigen::MatrixXd& inputs) {
  return model.network.forward_batch(inputs) * kLifterOutputScaleMm;
}

inline Pose3D pose3d_from_row(const Eigen::MatrixXd& rows, Eigen::Index r) {
  std::vector<std::array<double, 3>> coords(
      static_cast<std::size_t>(rows.cols() / 3));
  for (std::size_t j = 0; j < coords.size(); ++j)
    coords[j] = {rows(r, static_cast<Eigen::Index>(3 * j)),
                 rows(r, static_cast<Eigen::Index>(3 * j + 1)),
                 rows(r, static_cast<Eigen::Index>(3 * j + 2))};
  return root_center(coords);
}

/// Single-hypothesis prediction: root-centered 3D pose in millimeters.
inline Pose3D lift(const LifterModel& model, const Pose2D& pose2d) {
  if (2 * pose2d.joint_count() != model.network.spec().input_dim)
    throw ValidationError("lift: pose joint count does not match the model");
  const std::vector<double> flat = pose2d.flat();
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(flat.size()));
  for (std::size_t k = 0; k < flat.size(); ++k)
    row(0, static_cast<Eigen::Index>(k)) = flat[k];
  return pose3d_from_row(lift_batch_raw(model, row), 0);
}

/// Constant predictor used as a sanity baseline: the mean training pose.
inline Pose3D mean_pose(const std::vector<DatasetRecord>& records) {
  const int v = detail::dataset_joint_count(records);
  std::vector<std::array<double, 3>> mean(static_cast<std::size_t>(v),
                                          {0, 0, 0});
  for (const auto& rec : records)
    for (int j = 0; j < v; ++j)
      for (int k = 0; k < 3; ++k)
        mean[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] +=
            rec.gt_pose3d.joint(j)[static_cast<std::size_t>(k)];
  for (auto& c : mean)
    for (double& x : c) x /= static_cast<double>(records.size());
  return root_center(mean);
}

// ---------------------------------------------------------------------------
// Serialization
//
// Layout: magic "PRLF", u32 version, u64 dataset hash, i32 epochs,
// f64 final loss, u64 network blob length, network checkpoint bytes.

namespace detail {

constexpr char kLifterMagic[4] = {'P', 'R', 'L', 'F'};
constexpr std::uint32_t kLifterVersion = 1;

}  // namespace detail

inline std::string serialize_lifter(const LifterModel& model) {
  std::string out;
  out.append(detail::kLifterMagic, 4);
  detail::put_u32(out, detail::kLifterVersion);
  detail::put_u64(out, model.dataset_hash);
  detail::put_u32(out, static_cast<std::uint32_t>(model.epochs_trained));
  detail::put_f64(out, model.final_train_loss);
  const std::string net = serialize_network(model.network);
  detail::put_u64(out, net.size());
  out += net;
  return out;
}

inline LifterModel deserialize_lifter(const std::string& data,
                                      const std::string& what = "lifter") {
  if (data.size() < 8 || std::memcmp(data.data(), detail::kLifterMagic, 4) != 0)
    throw IoError(what + ": not a lifter checkpoint");
  detail::ByteReader r(data.substr(4), what);
  if (r.u32() != detail::kLifterVersion)
    throw IoError(what + ": unsupported lifter version");
  LifterModel model;
  model.dataset_hash = r.u64();
  model.epochs_trained = static_cast<int>(r.u32());
  model.final_train_loss = r.f64();
  const std::uint64_t net_len = r.u64();
  const std::size_t header = 4 + 4 + 8 + 4 + 8 + 8;
  if (data.size() != header + net_len)
    throw IoError(what + ": truncated lifter checkpoint");
  model.network = deserialize_network(data.substr(header), what);
  return model;
}

inline void save_lifter(const LifterModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  const std::string data = serialize_lifter(model);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline LifterModel load_lifter(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open lifter checkpoint: " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return deserialize_lifter(data, path);
}

inline std::uint64_t lifter_hash(const LifterModel& model) {
  return fnv1a64(serialize_lifter(model));
}

/// Training log as CSV rows of (epoch, loss).
inline void write_training_log(const std::string& path,
                               const std::vector<double>& epoch_losses) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "epoch,loss\n";
  for (std::size_t i = 0; i < epoch_losses.size(); ++i) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + 1, epoch_losses[i]);
    out << buf;
  }
}

}  // namespace prpose
