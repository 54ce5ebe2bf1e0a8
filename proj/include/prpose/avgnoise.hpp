// Weakly supervised adaptive variance learning: per-joint lifter errors are
// normalized into pseudo-labels (dataset mean exactly 1) that supervise a
// small variance-regression network over the 2D input.
//
// Two paradigms: an independent residual MLP, or a shared-encoder variant
// that reuses the frozen lifter's first hidden layer and trains only one
// dense mapping head on top of it.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "prpose/core.hpp"
#include "prpose/lifter.hpp"
#include "prpose/nn.hpp"
#include "prpose/synthgen.hpp"

namespace prpose {

constexpr double kDegenerateErrorThresholdMm = 1e-12;

struct PseudoLabelSet {
  std::vector<VarianceVector> labels;  // one per training sample
  double normalization_c = 0.0;        // mean per-joint error, millimeters
  std::uint64_t dataset_hash = 0;
  std::uint64_t lifter_hash = 0;

  void validate() const {
    if (labels.empty()) throw ValidationError("PseudoLabelSet: empty");
    if (!(normalization_c > 0))
      throw ValidationError("PseudoLabelSet: C must be > 0");
    const int v = labels.front().size();
    double total = 0.0;
    std::int64_t n = 0;
    for (const auto& row : labels) {
      if (row.size() != v)
        throw ValidationError("PseudoLabelSet: label lengths disagree");
      for (double x : row.values()) {
        if (!(x >= 0))
          throw ValidationError("PseudoLabelSet: negative label");
        total += x;
        ++n;
      }
    }
    if (std::abs(total / static_cast<double>(n) - 1.0) > 1e-9)
      throw ValidationError("PseudoLabelSet: labels do not average to 1");
  }
};

/// Normalization step: divides every per-joint distance by the global mean.
/// Kept separate so the arithmetic is testable without a trained lifter.
inline PseudoLabelSet pseudo_labels_from_distances(
    const Eigen::MatrixXd& distances_mm) {
  const double c = distances_mm.mean();
  if (!(c > kDegenerateErrorThresholdMm))
    throw DegenerateLabelsError(
        "pseudo labels degenerate: mean lifter error is " + std::to_string(c) +
        " mm");
  PseudoLabelSet out;
  out.normalization_c = c;
  out.labels.reserve(static_cast<std::size_t>(distances_mm.rows()));
  for (Eigen::Index i = 0; i < distances_mm.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(distances_mm.cols()));
    for (Eigen::Index j = 0; j < distances_mm.cols(); ++j)
      row[static_cast<std::size_t>(j)] = distances_mm(i, j) / c;
    out.labels.emplace_back(std::move(row));
  }
  return out;
}

/// Per-joint Euclidean errors of the frozen lifter over the training set,
/// normalized by their global mean C.
inline PseudoLabelSet compute_pseudo_labels(
    const LifterModel& lifter, const std::vector<DatasetRecord>& train,
    std::uint64_t dataset_hash = 0) {
  if (train.empty())
    throw ValidationError("compute_pseudo_labels: empty training set");
  const int v = detail::dataset_joint_count(train);
  if (2 * v != lifter.network.spec().input_dim)
    throw ValidationError("compute_pseudo_labels: lifter/dataset V mismatch");

  const Eigen::MatrixXd inputs = detail::inputs_from_records(train);
  Eigen::MatrixXd distances(static_cast<Eigen::Index>(train.size()), v);
  constexpr Eigen::Index kChunk = 1024;
  for (Eigen::Index start = 0; start < inputs.rows(); start += kChunk) {
    const Eigen::Index take = std::min(kChunk, inputs.rows() - start);
    const Eigen::MatrixXd pred =
        lift_batch_raw(lifter, inputs.middleRows(start, take));
    for (Eigen::Index r = 0; r < take; ++r) {
      const auto& gt = train[static_cast<std::size_t>(start + r)].gt_pose3d;
      const double rx = pred(r, 0), ry = pred(r, 1), rz = pred(r, 2);
      for (int j = 0; j < v; ++j) {
        const double dx = pred(r, 3 * j) - rx - gt.joint(j)[0];
        const double dy = pred(r, 3 * j + 1) - ry - gt.joint(j)[1];
        const double dz = pred(r, 3 * j + 2) - rz - gt.joint(j)[2];
        distances(start + r, j) = std::sqrt(dx * dx + dy * dy + dz * dz);
      }
    }
  }
  PseudoLabelSet labels = pseudo_labels_from_distances(distances);
  labels.dataset_hash = dataset_hash;
  labels.lifter_hash = lifter_hash(lifter);
  return labels;
}

// ---------------------------------------------------------------------------
// Pseudo-label cache file

inline std::string serialize_pseudo_labels(const PseudoLabelSet& set) {
  std::string out = "prpose-pseudolabels v1 dataset=" +
                    hash_hex(set.dataset_hash) +
                    " lifter=" + hash_hex(set.lifter_hash) + " c=";
  detail::append_double(out, set.normalization_c);
  out += " joints=" + std::to_string(set.labels.front().size()) +
         " count=" + std::to_string(set.labels.size()) + "\n";
  for (const auto& row : set.labels) {
    bool first = true;
    for (double x : row.values()) {
      if (!first) out += ' ';
      detail::append_double(out, x);
      first = false;
    }
    out += '\n';
  }
  return out;
}

inline PseudoLabelSet parse_pseudo_labels(const std::string& text,
                                          const std::string& what) {
  std::istringstream in(text);
  std::string tag, version, dataset_field, lifter_field, c_field,
      joints_field, count_field;
  in >> tag >> version >> dataset_field >> lifter_field >> c_field >>
      joints_field >> count_field;
  if (!in || tag != "prpose-pseudolabels")
    throw IoError(what + ": not a pseudo-label file");
  if (version != "v1")
    throw IoError(what + ": unsupported version " + version);
  if (dataset_field.rfind("dataset=", 0) != 0 ||
      lifter_field.rfind("lifter=", 0) != 0 || c_field.rfind("c=", 0) != 0 ||
      joints_field.rfind("joints=", 0) != 0 ||
      count_field.rfind("count=", 0) != 0)
    throw IoError(what + ": malformed header");
  PseudoLabelSet set;
  set.dataset_hash = std::stoull(dataset_field.substr(8), nullptr, 16);
  set.lifter_hash = std::stoull(lifter_field.substr(7), nullptr, 16);
  set.normalization_c = std::stod(c_field.substr(2));
  const int v = std::stoi(joints_field.substr(7));
  const std::int64_t count = std::stoll(count_field.substr(6));
  for (std::int64_t i = 0; i < count; ++i) {
    std::vector<double> row(static_cast<std::size_t>(v));
    for (int j = 0; j < v; ++j) {
      in >> row[static_cast<std::size_t>(j)];
      if (!in) throw IoError(what + ": truncated at row " + std::to_string(i));
    }
    set.labels.emplace_back(std::move(row));
  }
  std::string leftover;
  if (in >> leftover) throw IoError(what + ": trailing content");
  set.validate();
  return set;
}

inline void save_pseudo_labels(const PseudoLabelSet& set,
                               const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  const std::string data = serialize_pseudo_labels(set);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline PseudoLabelSet load_pseudo_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open pseudo-label file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_pseudo_labels(text, path);
}

// ---------------------------------------------------------------------------
// Adaptive variance model

enum class AvgParadigm : std::uint8_t { kIndependent = 0, kShared = 1 };

inline std::string paradigm_name(AvgParadigm p) {
  return p == AvgParadigm::kIndependent ? "independent" : "shared";
}

inline AvgParadigm paradigm_from_name(const std::string& name) {
  if (name == "independent") return AvgParadigm::kIndependent;
  if (name == "shared") return AvgParadigm::kShared;
  throw ConfigError("unknown paradigm: " + name);
}

struct AvgTrainConfig {
  int hidden_dim = 128;
  int block_count = 1;
  Activation activation = Activation::kReLU;
  int epochs = 100;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double lr_decay_factor = 0.1;
  int lr_decay_epoch = 75;
  std::uint64_t seed = 1;
};

struct AvgModel {
  AvgParadigm paradigm = AvgParadigm::kIndependent;
  Network network;  // input 2V, output V
  std::uint64_t dataset_hash = 0;
  std::uint64_t lifter_hash = 0;  // encoder provenance for the shared paradigm
  double final_train_loss = 0.0;
  std::vector<double> epoch_losses;
};

/// Trains the variance model against pseudo-labels with MSE. The shared
/// paradigm copies the frozen lifter's first hidden layer as a non-trainable
/// encoder and trains only the mapping head; the lifter itself is never
/// touched.
inline AvgModel train_avg(const std::vector<DatasetRecord>& train,
                          const PseudoLabelSet& pseudo,
                          const AvgTrainConfig& config, AvgParadigm paradigm,
                          const LifterModel* lifter = nullptr) {
  const int v = detail::dataset_joint_count(train);
  pseudo.validate();
  if (pseudo.labels.size() != train.size())
    throw ValidationError("train_avg: pseudo-label count != sample count");
  if (pseudo.labels.front().size() != v)
    throw ValidationError("train_avg: pseudo-label joint count mismatch");

  const Eigen::MatrixXd x = detail::inputs_from_records(train);
  Eigen::MatrixXd y(static_cast<Eigen::Index>(train.size()), v);
  for (std::size_t i = 0; i < train.size(); ++i)
    for (int j = 0; j < v; ++j)
      y(static_cast<Eigen::Index>(i), j) = pseudo.labels[i][j];

  AvgModel model;
  model.paradigm = paradigm;
  Rng init_rng = Rng::keyed(config.seed, 0xA46u);
  if (paradigm == AvgParadigm::kIndependent) {
    NetSpec spec{2 * v, v, config.hidden_dim, config.block_count,
                 config.activation};
    model.network = Network::random_init(spec, init_rng);
  } else {
    if (lifter == nullptr)
      throw ConfigError("train_avg: shared paradigm needs a lifter");
    if (lifter->network.spec().input_dim != 2 * v)
      throw ValidationError("train_avg: lifter joint count mismatch");
    NetSpec spec{2 * v, v, lifter->network.spec().hidden_dim, 0,
                 lifter->network.spec().activation};
    model.network = Network::random_init(spec, init_rng);
    model.network.mutable_layer(0) = lifter->network.layer(0);
    model.network.set_layer_trainable(0, false);
    model.lifter_hash = lifter_hash(*lifter);
  }

  TrainSchedule schedule;
  schedule.epochs = config.epochs;
  schedule.batch_size = config.batch_size;
  schedule.learning_rate = config.learning_rate;
  schedule.lr_decay_factor = config.lr_decay_factor;
  schedule.lr_decay_epoch = config.lr_decay_epoch;
  schedule.seed = config.seed;
  TrainResult result =
      train_network(model.network, x, y, LossKind::kMse, schedule);

  model.network.freeze();
  model.dataset_hash = pseudo.dataset_hash;
  model.epoch_losses = std::move(result.epoch_losses);
  model.final_train_loss = model.epoch_losses.back();
  return model;
}

/// Raw variance prediction; entries may be negative until the sampling-time
/// clamp is applied.
inline VarianceVector predict_variance(const AvgModel& model,
                                       const Pose2D& pose2d) {
  if (2 * pose2d.joint_count() != model.network.spec().input_dim)
    throw ValidationError("predict_variance: joint count mismatch");
  const std::vector<double> flat = pose2d.flat();
  Eigen::VectorXd input(static_cast<Eigen::Index>(flat.size()));
  for (std::size_t k = 0; k < flat.size(); ++k)
    input(static_cast<Eigen::Index>(k)) = flat[k];
  const Eigen::VectorXd out = model.network.forward(input);
  return VarianceVector(std::vector<double>(out.data(), out.data() + out.size()));
}

/// Trainable parameters introduced by the model (for the shared paradigm
/// this is exactly the mapping head).
inline std::int64_t avg_new_parameter_count(const AvgModel& model) {
  return model.network.trainable_parameter_count();
}

inline std::int64_t avg_head_parameter_count(const AvgModel& model) {
  return model.network.output_layer().parameter_count();
}

// ---------------------------------------------------------------------------
// KL divergence between same-mean Gaussians

/// KL(N(mu, sigma^2) || N(mu, sigma_hat^2))
///   = 1/2 [ log((sigma_hat/sigma)^2) + sigma^2/sigma_hat^2 - 1 ].
/// Zero exactly when the two deviations agree; asymmetric otherwise.
inline double kl_gaussian(double sigma, double sigma_hat) {
  if (!(sigma > 0) || !(sigma_hat > 0))
    throw ValidationError("kl_gaussian: deviations must be > 0");
  const double ratio = sigma_hat / sigma;
  const double var_ratio = (sigma * sigma) / (sigma_hat * sigma_hat);
  return 0.5 * (std::log(ratio * ratio) + var_ratio - 1.0);
}

// ---------------------------------------------------------------------------
// Serialization
//
// Layout: magic "PRAV", u32 version, u8 paradigm, u64 dataset hash,
// u64 lifter hash, f64 final loss, u64 network blob length, network bytes.

namespace detail {

constexpr char kAvgMagic[4] = {'P', 'R', 'A', 'V'};
constexpr std::uint32_t kAvgVersion = 1;

}  // namespace detail

inline std::string serialize_avg(const AvgModel& model) {
  std::string out;
  out.append(detail::kAvgMagic, 4);
  detail::put_u32(out, detail::kAvgVersion);
  out.push_back(static_cast<char>(model.paradigm));
  detail::put_u64(out, model.dataset_hash);
  detail::put_u64(out, model.lifter_hash);
  detail::put_f64(out, model.final_train_loss);
  const std::string net = serialize_network(model.network);
  detail::put_u64(out, net.size());
  out += net;
  return out;
}

inline AvgModel deserialize_avg(const std::string& data,
                                const std::string& what = "avg") {
  if (data.size() < 8 || std::memcmp(data.data(), detail::kAvgMagic, 4) != 0)
    throw IoError(what + ": not an avg checkpoint");
  detail::ByteReader r(data.substr(4), what);
  if (r.u32() != detail::kAvgVersion)
    throw IoError(what + ": unsupported avg version");
  AvgModel model;
  const std::uint8_t paradigm = r.u8();
  if (paradigm > 1) throw IoError(what + ": bad paradigm tag");
  model.paradigm = static_cast<AvgParadigm>(paradigm);
  model.dataset_hash = r.u64();
  model.lifter_hash = r.u64();
  model.final_train_loss = r.f64();
  const std::uint64_t net_len = r.u64();
  const std::size_t header = 4 + 4 + 1 + 8 + 8 + 8 + 8;
  if (data.size() != header + net_len)
    throw IoError(what + ": truncated avg checkpoint");
  model.network = deserialize_network(data.substr(header), what);
  return model;
}

inline void save_avg(const AvgModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  const std::string data = serialize_avg(model);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline AvgModel load_avg(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open avg checkpoint: " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return deserialize_avg(data, path);
}

inline std::uint64_t avg_hash(const AvgModel& model) {
  return fnv1a64(serialize_avg(model));
}

}  // namespace prpose
