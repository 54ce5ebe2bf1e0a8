// Minimal differentiable network core: residual-block MLPs with analytic
// gradients, Adam, a finite-difference gradient checker, and bit-exact
// checkpoint serialization.
//
// Architecture for NetSpec{in, out, hidden, blocks, act}:
//
//   h0   = act(W_in x + b_in)
//   hk+1 = hk + act(W_b act(W_a hk + b_a) + b_b)     (block_count times)
//   y    = W_out h + b_out                           (linear head)
//
// Layer order (also the checkpoint order): input layer, then per block the
// two dense layers, then the output layer. Batches are row-major: one sample
// per row. All math is 64-bit.
#pragma once

#include <Eigen/Dense>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "prpose/core.hpp"
#include "prpose/rng.hpp"

namespace prpose {

enum class Activation : std::uint8_t { kReLU = 0, kIdentity = 1 };

inline std::string activation_name(Activation a) {
  return a == Activation::kReLU ? "relu" : "identity";
}

inline Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::kReLU;
  if (name == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation: " + name);
}

struct NetSpec {
  int input_dim = 0;
  int output_dim = 0;
  int hidden_dim = 0;
  int block_count = 0;
  Activation activation = Activation::kReLU;

  void validate() const {
    if (input_dim < 1 || output_dim < 1 || hidden_dim < 1)
      throw ValidationError("NetSpec: dimensions must be >= 1");
    if (block_count < 0)
      throw ValidationError("NetSpec: block_count must be >= 0");
  }

  int layer_count() const { return 2 + 2 * block_count; }

  bool operator==(const NetSpec& other) const = default;
};

struct DenseLayer {
  Eigen::MatrixXd weight;  // (out_dim, in_dim)
  Eigen::VectorXd bias;    // (out_dim)
  bool trainable = true;

  std::int64_t parameter_count() const {
    return static_cast<std::int64_t>(weight.size() + bias.size());
  }
};

namespace detail {

inline Eigen::MatrixXd apply_activation(Activation a,
                                        const Eigen::MatrixXd& pre) {
  if (a == Activation::kIdentity) return pre;
  return pre.cwiseMax(0.0);
}

// Derivative w.r.t. the pre-activation; ReLU uses 0 at the kink.
inline Eigen::ArrayXXd activation_deriv(Activation a,
                                        const Eigen::MatrixXd& pre) {
  if (a == Activation::kIdentity)
    return Eigen::ArrayXXd::Ones(pre.rows(), pre.cols());
  return (pre.array() > 0.0).cast<double>();
}

// Row-major batch through one dense layer: (B, in) -> (B, out).
inline Eigen::MatrixXd dense(const DenseLayer& l, const Eigen::MatrixXd& x) {
  return (x * l.weight.transpose()).rowwise() + l.bias.transpose();
}

}  // namespace detail

/// Per-parameter gradients with the same shapes as the network layers.
struct Gradients {
  std::vector<Eigen::MatrixXd> weight;
  std::vector<Eigen::VectorXd> bias;
};

/// Intermediate activations kept for the backward pass.
struct ForwardTrace {
  Eigen::MatrixXd input;
  Eigen::MatrixXd input_pre;              // pre-activation of the input layer
  std::vector<Eigen::MatrixXd> hidden;    // h0 .. h_blocks
  std::vector<Eigen::MatrixXd> block_upre;
  std::vector<Eigen::MatrixXd> block_u;
  std::vector<Eigen::MatrixXd> block_vpre;
  Eigen::MatrixXd output;
};

class Network {
 public:
  Network() = default;

  /// Zero-initialized network of the given shape.
  explicit Network(const NetSpec& spec) : spec_(spec) {
    spec_.validate();
    layers_.reserve(spec_.layer_count());
    auto zero_layer = [](int out, int in) {
      return DenseLayer{Eigen::MatrixXd::Zero(out, in),
                        Eigen::VectorXd::Zero(out), true};
    };
    layers_.push_back(zero_layer(spec_.hidden_dim, spec_.input_dim));
    for (int b = 0; b < spec_.block_count; ++b) {
      layers_.push_back(zero_layer(spec_.hidden_dim, spec_.hidden_dim));
      layers_.push_back(zero_layer(spec_.hidden_dim, spec_.hidden_dim));
    }
    layers_.push_back(zero_layer(spec_.output_dim, spec_.hidden_dim));
  }

  /// He-style uniform init scaled by fan-in, biases zero. Fill order is the
  /// documented layer order, row-major within each weight matrix.
  static Network random_init(const NetSpec& spec, Rng& rng) {
    Network net(spec);
    for (auto& layer : net.layers_) {
      const double limit =
          std::sqrt(6.0 / static_cast<double>(layer.weight.cols()));
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
          layer.weight(r, c) = rng.uniform(-limit, limit);
    }
    return net;
  }

  const NetSpec& spec() const { return spec_; }
  int layer_count() const { return static_cast<int>(layers_.size()); }
  const DenseLayer& layer(int i) const { return layers_[i]; }
  const DenseLayer& output_layer() const { return layers_.back(); }

  /// Setup-time weight access; training code goes through adam_step.
  DenseLayer& mutable_layer(int i) { return layers_[i]; }

  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }
  void thaw() { frozen_ = false; }

  void set_layer_trainable(int i, bool trainable) {
    layers_[i].trainable = trainable;
  }

  std::int64_t parameter_count() const {
    std::int64_t n = 0;
    for (const auto& l : layers_) n += l.parameter_count();
    return n;
  }

  std::int64_t trainable_parameter_count() const {
    std::int64_t n = 0;
    for (const auto& l : layers_)
      if (l.trainable) n += l.parameter_count();
    return n;
  }

  /// Batched forward pass; rows are samples.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const {
    check_input_cols(inputs.cols());
    Eigen::MatrixXd h =
        detail::apply_activation(spec_.activation, detail::dense(layers_[0], inputs));
    for (int b = 0; b < spec_.block_count; ++b) {
      const Eigen::MatrixXd u = detail::apply_activation(
          spec_.activation, detail::dense(layers_[1 + 2 * b], h));
      h += detail::apply_activation(spec_.activation,
                                    detail::dense(layers_[2 + 2 * b], u));
    }
    return detail::dense(layers_.back(), h);
  }

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const {
    check_input_cols(input.size());
    return forward_batch(input.transpose()).row(0).transpose();
  }

  ForwardTrace forward_trace(const Eigen::MatrixXd& inputs) const {
    check_input_cols(inputs.cols());
    ForwardTrace t;
    t.input = inputs;
    t.input_pre = detail::dense(layers_[0], inputs);
    t.hidden.push_back(detail::apply_activation(spec_.activation, t.input_pre));
    for (int b = 0; b < spec_.block_count; ++b) {
      const Eigen::MatrixXd& h = t.hidden.back();
      t.block_upre.push_back(detail::dense(layers_[1 + 2 * b], h));
      t.block_u.push_back(
          detail::apply_activation(spec_.activation, t.block_upre.back()));
      t.block_vpre.push_back(detail::dense(layers_[2 + 2 * b], t.block_u.back()));
      t.hidden.push_back(
          h + detail::apply_activation(spec_.activation, t.block_vpre.back()));
    }
    t.output = detail::dense(layers_.back(), t.hidden.back());
    return t;
  }

  /// Gradients of sum_rows(upstream . output) w.r.t. every parameter.
  Gradients backward_with_trace(const ForwardTrace& t,
                                const Eigen::MatrixXd& upstream) const {
    if (upstream.rows() != t.output.rows() ||
        upstream.cols() != t.output.cols())
      throw ValidationError("backward: upstream shape mismatch");
    Gradients g;
    g.weight.resize(layers_.size());
    g.bias.resize(layers_.size());

    const int last = static_cast<int>(layers_.size()) - 1;
    g.weight[last] = upstream.transpose() * t.hidden.back();
    g.bias[last] = upstream.colwise().sum();
    Eigen::MatrixXd dh = upstream * layers_[last].weight;

    for (int b = spec_.block_count - 1; b >= 0; --b) {
      const Eigen::MatrixXd dvpre =
          (dh.array() * detail::activation_deriv(spec_.activation,
                                                 t.block_vpre[b]))
              .matrix();
      g.weight[2 + 2 * b] = dvpre.transpose() * t.block_u[b];
      g.bias[2 + 2 * b] = dvpre.colwise().sum();
      const Eigen::MatrixXd du = dvpre * layers_[2 + 2 * b].weight;
      const Eigen::MatrixXd dupre =
          (du.array() *
           detail::activation_deriv(spec_.activation, t.block_upre[b]))
              .matrix();
      g.weight[1 + 2 * b] = dupre.transpose() * t.hidden[b];
      g.bias[1 + 2 * b] = dupre.colwise().sum();
      // Skip connection: gradient flows both through the block and around it.
      dh += dupre * layers_[1 + 2 * b].weight;
    }

    const Eigen::MatrixXd dpre0 =
        (dh.array() * detail::activation_deriv(spec_.activation, t.input_pre))
            .matrix();
    g.weight[0] = dpre0.transpose() * t.input;
    g.bias[0] = dpre0.colwise().sum();
    return g;
  }

  Gradients backward(const Eigen::VectorXd& input,
                     const Eigen::VectorXd& upstream) const {
    ForwardTrace t = forward_trace(input.transpose());
    return backward_with_trace(t, upstream.transpose());
  }

 private:
  void check_input_cols(Eigen::Index cols) const {
    if (layers_.empty()) throw ValidationError("Network: uninitialized");
    if (cols != spec_.input_dim)
      throw ValidationError("Network: input has " + std::to_string(cols) +
                            " dims, spec expects " +
                            std::to_string(spec_.input_dim));
  }

  NetSpec spec_;
  std::vector<DenseLayer> layers_;
  bool frozen_ = false;
};

// ---------------------------------------------------------------------------
// Losses

enum class LossKind : std::uint8_t { kL1 = 0, kMse = 1 };

/// Mean over all batch entries and coordinates.
inline double loss_value(LossKind kind, const Eigen::MatrixXd& out,
                         const Eigen::MatrixXd& target) {
  if (out.rows() != target.rows() || out.cols() != target.cols())
    throw ValidationError("loss: output/target shape mismatch");
  const double n = static_cast<double>(out.size());
  if (kind == LossKind::kL1) return (out - target).cwiseAbs().sum() / n;
  return (out - target).squaredNorm() / n;
}

inline Eigen::MatrixXd loss_grad(LossKind kind, const Eigen::MatrixXd& out,
                                 const Eigen::MatrixXd& target) {
  const double n = static_cast<double>(out.size());
  if (kind == LossKind::kL1) {
    Eigen::ArrayXXd diff = (out - target).array();
    return (diff.sign() / n).matrix();
  }
  return (2.0 / n) * (out - target);
}

// ---------------------------------------------------------------------------
// Gradient checking

/// Smallest |pre-activation| seen anywhere in the forward pass; gradient
/// checks should resample inputs when this falls under ~1e-8 (ReLU kink).
inline double min_preactivation_gap(const Network& net,
                                    const Eigen::VectorXd& input) {
  if (net.spec().activation == Activation::kIdentity)
    return std::numeric_limits<double>::infinity();
  ForwardTrace t = net.forward_trace(input.transpose());
  double gap = t.input_pre.array().abs().minCoeff();
  for (const auto& m : t.block_upre)
    gap = std::min(gap, m.array().abs().minCoeff());
  for (const auto& m : t.block_vpre)
    gap = std::min(gap, m.array().abs().minCoeff());
  return gap;
}

/// Central finite differences of loss(net(input), target) over every
/// parameter.
inline Gradients finite_diff_gradients(const Network& net,
                                       const Eigen::VectorXd& input,
                                       LossKind loss,
                                       const Eigen::VectorXd& target,
                                       double step = 1e-5) {
  Network probe = net;  // perturbed copy
  auto loss_at = [&probe, &input, loss, &target]() {
    return loss_value(loss, probe.forward(input).transpose(),
                      target.transpose());
  };
  auto diff_at = [&](double& value) {
    const double saved = value;
    value = saved + step;
    const double up = loss_at();
    value = saved - step;
    const double down = loss_at();
    value = saved;
    return (up - down) / (2.0 * step);
  };

  Gradients g;
  g.weight.resize(net.layer_count());
  g.bias.resize(net.layer_count());
  for (int li = 0; li < net.layer_count(); ++li) {
    DenseLayer& l = probe.mutable_layer(li);
    g.weight[li].resize(l.weight.rows(), l.weight.cols());
    g.bias[li].resize(l.bias.size());
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
        g.weight[li](r, c) = diff_at(l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r)
      g.bias[li](r) = diff_at(l.bias(r));
  }
  return g;
}

/// max over parameters of |a - b| / max(|a|, |b|, 1e-12).
inline double max_relative_error(const Gradients& a, const Gradients& b) {
  double max_rel = 0.0;
  auto scan = [&max_rel](const auto& x, const auto& y) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double av = x.reshaped()(i);
      const double bv = y.reshaped()(i);
      const double rel =
          std::abs(av - bv) / std::max({std::abs(av), std::abs(bv), 1e-12});
      max_rel = std::max(max_rel, rel);
    }
  };
  for (std::size_t li = 0; li < a.weight.size(); ++li) {
    scan(a.weight[li], b.weight[li]);
    scan(a.bias[li], b.bias[li]);
  }
  return max_rel;
}

/// Max over parameters of the relative error between analytic gradients and
/// central finite differences of loss(net(input), target).
inline double grad_check(const Network& net, const Eigen::VectorXd& input,
                         LossKind loss, const Eigen::VectorXd& target,
                         double step = 1e-5) {
  ForwardTrace trace = net.forward_trace(input.transpose());
  const Eigen::MatrixXd g = loss_grad(loss, trace.output, target.transpose());
  const Gradients analytic = net.backward_with_trace(trace, g);
  const Gradients numeric =
      finite_diff_gradients(net, input, loss, target, step);
  return max_relative_error(analytic, numeric);
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class OptimizerState {
 public:
  OptimizerState(const Network& net, AdamConfig config = {})
      : config_(config) {
    m_weight_.reserve(net.layer_count());
    for (int i = 0; i < net.layer_count(); ++i) {
      const DenseLayer& l = net.layer(i);
      m_weight_.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
      v_weight_.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
      m_bias_.push_back(Eigen::VectorXd::Zero(l.bias.size()));
      v_bias_.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }
  }

  std::int64_t step_count() const { return t_; }
  AdamConfig& config() { return config_; }
  const AdamConfig& config() const { return config_; }

  friend void adam_step(OptimizerState& state, Network& net,
                        const Gradients& grads);

 private:
  AdamConfig config_;
  std::int64_t t_ = 0;
  std::vector<Eigen::MatrixXd> m_weight_, v_weight_;
  std::vector<Eigen::VectorXd> m_bias_, v_bias_;
};

/// Standard Adam update with bias correction. Layers marked non-trainable
/// are skipped (their moments stay untouched); frozen networks reject the
/// update outright.
inline void adam_step(OptimizerState& state, Network& net,
                      const Gradients& grads) {
  if (net.frozen())
    throw FrozenModelError("adam_step: network is frozen");
  if (static_cast<int>(grads.weight.size()) != net.layer_count())
    throw ValidationError("adam_step: gradient layer count mismatch");
  state.t_ += 1;
  const double t = static_cast<double>(state.t_);
  const AdamConfig& c = state.config_;
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (int i = 0; i < net.layer_count(); ++i) {
    if (!net.layer(i).trainable) continue;
    DenseLayer& l = net.mutable_layer(i);
    auto update = [&](auto& theta, auto& m, auto& v, const auto& g) {
      m = c.beta1 * m + (1.0 - c.beta1) * g;
      v = (c.beta2 * v).array() + (1.0 - c.beta2) * g.array().square();
      theta.array() -=
          c.learning_rate * (m.array() / bc1) /
          ((v.array() / bc2).sqrt() + c.epsilon);
    };
    update(l.weight, state.m_weight_[i], state.v_weight_[i], grads.weight[i]);
    update(l.bias, state.m_bias_[i], state.v_bias_[i], grads.bias[i]);
  }
}

// ---------------------------------------------------------------------------
// Mini-batch training

struct TrainSchedule {
  int epochs = 100;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double lr_decay_factor = 1.0;  // multiplied in once lr_decay_epoch starts
  int lr_decay_epoch = std::numeric_limits<int>::max();  // 1-based
  std::uint64_t seed = 1;

  void validate() const {
    if (epochs < 1 || batch_size < 1)
      throw ConfigError("TrainSchedule: epochs and batch_size must be >= 1");
    if (!(learning_rate > 0))
      throw ConfigError("TrainSchedule: learning rate must be > 0");
  }
};

struct TrainResult {
  std::vector<double> epoch_losses;  // mean loss over the epoch's batches
};

/// Shuffled mini-batch Adam training of net on (inputs, targets) rows.
/// Honors per-layer trainable flags; throws TrainingDivergedError with the
/// 1-based epoch index when the epoch loss stops being finite.
inline TrainResult train_network(Network& net, const Eigen::MatrixXd& inputs,
                                 const Eigen::MatrixXd& targets, LossKind loss,
                                 const TrainSchedule& schedule) {
  schedule.validate();
  if (inputs.rows() == 0) throw ValidationError("train_network: empty data");
  if (inputs.rows() != targets.rows())
    throw ValidationError("train_network: input/target row mismatch");
  if (net.frozen()) throw FrozenModelError("train_network: network is frozen");

  const auto n = inputs.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  OptimizerState state(net, AdamConfig{schedule.learning_rate});
  TrainResult result;
  result.epoch_losses.reserve(static_cast<std::size_t>(schedule.epochs));
  Rng shuffle_rng = Rng::keyed(schedule.seed, 0x5AFF1Eu);
  for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
    state.config().learning_rate =
        epoch >= schedule.lr_decay_epoch
            ? schedule.learning_rate * schedule.lr_decay_factor
            : schedule.learning_rate;
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    Eigen::Index done = 0;
    while (done < n) {
      const Eigen::Index take =
          std::min<Eigen::Index>(schedule.batch_size, n - done);
      Eigen::MatrixXd x(take, inputs.cols()), y(take, targets.cols());
      for (Eigen::Index r = 0; r < take; ++r) {
        x.row(r) = inputs.row(order[static_cast<std::size_t>(done + r)]);
        y.row(r) = targets.row(order[static_cast<std::size_t>(done + r)]);
      }
      ForwardTrace trace = net.forward_trace(x);
      loss_sum += loss_value(loss, trace.output, y) * static_cast<double>(take);
      Gradients grads =
          net.backward_with_trace(trace, loss_grad(loss, trace.output, y));
      adam_step(state, net, grads);
      done += take;
    }
    const double epoch_loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(epoch_loss))
      throw TrainingDivergedError(
          "train_network: non-finite loss at epoch " + std::to_string(epoch),
          epoch);
    result.epoch_losses.push_back(epoch_loss);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// Binary layout (all integers little-endian):
//   magic "PRPN", u32 version, i32 input/output/hidden/block dims,
//   u8 activation, u8 frozen, u32 layer_count, per-layer u8 trainable,
//   u64 parameter count, then per layer the weight matrix row-major and the
//   bias vector, as little-endian IEEE-754 doubles.

namespace detail {

constexpr char kCheckpointMagic[4] = {'P', 'R', 'P', 'N'};
constexpr std::uint32_t kCheckpointVersion = 1;

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::string& out, double d) {
  put_u64(out, std::bit_cast<std::uint64_t>(d));
}

class ByteReader {
 public:
  ByteReader(std::string data, std::string what)
      : data_(std::move(data)), what_(std::move(what)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(byte()); }

  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return v;
  }

  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  void expect_end() const {
    if (pos_ != data_.size()) throw IoError(what_ + ": trailing bytes");
  }

 private:
  unsigned char byte() {
    if (pos_ >= data_.size()) throw IoError(what_ + ": truncated");
    return static_cast<unsigned char>(data_[pos_++]);
  }

  std::string data_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_network(const Network& net) {
  std::string out;
  out.append(detail::kCheckpointMagic, 4);
  detail::put_u32(out, detail::kCheckpointVersion);
  const NetSpec& s = net.spec();
  detail::put_u32(out, static_cast<std::uint32_t>(s.input_dim));
  detail::put_u32(out, static_cast<std::uint32_t>(s.output_dim));
  detail::put_u32(out, static_cast<std::uint32_t>(s.hidden_dim));
  detail::put_u32(out, static_cast<std::uint32_t>(s.block_count));
  out.push_back(static_cast<char>(s.activation));
  out.push_back(net.frozen() ? 1 : 0);
  detail::put_u32(out, static_cast<std::uint32_t>(net.layer_count()));
  for (int i = 0; i < net.layer_count(); ++i)
    out.push_back(net.layer(i).trainable ? 1 : 0);
  detail::put_u64(out, static_cast<std::uint64_t>(net.parameter_count()));
  for (int i = 0; i < net.layer_count(); ++i) {
    const DenseLayer& l = net.layer(i);
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
        detail::put_f64(out, l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r)
      detail::put_f64(out, l.bias(r));
  }
  return out;
}

inline Network deserialize_network(const std::string& data,
                                   const std::string& what = "checkpoint") {
  detail::ByteReader r(data, what);
  char magic[4];
  for (char& m : magic) m = static_cast<char>(r.u8());
  if (std::memcmp(magic, detail::kCheckpointMagic, 4) != 0)
    throw IoError(what + ": bad magic");
  const std::uint32_t version = r.u32();
  if (version != detail::kCheckpointVersion)
    throw IoError(what + ": unsupported version " + std::to_string(version));
  NetSpec spec;
  spec.input_dim = r.i32();
  spec.output_dim = r.i32();
  spec.hidden_dim = r.i32();
  spec.block_count = r.i32();
  const std::uint8_t act = r.u8();
  if (act > 1) throw IoError(what + ": bad activation tag");
  spec.activation = static_cast<Activation>(act);
  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw IoError(what + ": " + e.what());
  }
  const bool frozen = r.u8() != 0;
  const std::uint32_t layer_count = r.u32();
  if (layer_count != static_cast<std::uint32_t>(spec.layer_count()))
    throw IoError(what + ": layer count does not match spec");
  std::vector<bool> trainable(layer_count);
  for (std::uint32_t i = 0; i < layer_count; ++i) trainable[i] = r.u8() != 0;
  Network net(spec);
  const std::uint64_t declared = r.u64();
  if (declared != static_cast<std::uint64_t>(net.parameter_count()))
    throw IoError(what + ": parameter count does not match spec");
  for (int i = 0; i < net.layer_count(); ++i) {
    DenseLayer& l = net.mutable_layer(i);
    for (Eigen::Index row = 0; row < l.weight.rows(); ++row)
      for (Eigen::Index col = 0; col < l.weight.cols(); ++col)
        l.weight(row, col) = r.f64();
    for (Eigen::Index row = 0; row < l.bias.size(); ++row)
      l.bias(row) = r.f64();
    l.trainable = trainable[i];
  }
  r.expect_end();
  if (frozen) net.freeze();
  return net;
}

inline void save_checkpoint(const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  const std::string data = serialize_network(net);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline Network load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return deserialize_network(data, path);
}

inline std::uint64_t network_hash(const Network& net) {
  return fnv1a64(serialize_network(net));
}

}  // namespace prpose
