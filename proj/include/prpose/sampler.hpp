// Multi-hypothesis generation: adjust predicted variances with the
// clamp-and-scale rule sigma_tilde = alpha * max(sigma, 1), amplify the 2D
// input with independent per-coordinate Gaussian noise, and lift every
// amplified sample. The post-sample variant perturbs the lifted 3D pose
// instead.
//
// All noise draws come from substreams keyed by (seed, sample id, hypothesis
// index), so hypothesis lists for growing S share a common prefix and results
// do not depend on evaluation order.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "prpose/avgnoise.hpp"
#include "prpose/core.hpp"
#include "prpose/lifter.hpp"
#include "prpose/rng.hpp"
#include "prpose/synthgen.hpp"

namespace prpose {

enum class NoiseKind : std::uint8_t {
  kNoAdapted = 0,
  kJointsAdapted = 1,
  kSampleAdapted = 2,
  kSampleJointsAdapted = 3,
};

enum class NoiseLayer : std::uint8_t { kPreSample = 0, kPostSample = 1 };

inline std::string noise_kind_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::kNoAdapted: return "no_adapted";
    case NoiseKind::kJointsAdapted: return "joints_adapted";
    case NoiseKind::kSampleAdapted: return "sample_adapted";
    case NoiseKind::kSampleJointsAdapted: return "sample_joints_adapted";
  }
  throw ConfigError("bad noise kind");
}

inline NoiseKind noise_kind_from_name(const std::string& name) {
  if (name == "no_adapted") return NoiseKind::kNoAdapted;
  if (name == "joints_adapted") return NoiseKind::kJointsAdapted;
  if (name == "sample_adapted") return NoiseKind::kSampleAdapted;
  if (name == "sample_joints_adapted") return NoiseKind::kSampleJointsAdapted;
  throw ConfigError("unknown strategy: " + name);
}

inline std::string noise_layer_name(NoiseLayer l) {
  return l == NoiseLayer::kPreSample ? "pre" : "post";
}

inline NoiseLayer noise_layer_from_name(const std::string& name) {
  if (name == "pre") return NoiseLayer::kPreSample;
  if (name == "post") return NoiseLayer::kPostSample;
  throw ConfigError("unknown noise layer: " + name);
}

struct NoiseStrategy {
  NoiseKind kind = NoiseKind::kSampleJointsAdapted;
  double alpha = 0.005;
  NoiseLayer layer = NoiseLayer::kPreSample;

  void validate() const {
    if (!(alpha > 0)) throw ValidationError("NoiseStrategy: alpha must be > 0");
  }
};

/// Training-set mean pseudo-label per joint; drives the joints-adapted
/// strategy. Inherits the mean-1 normalization of the labels.
struct JointPrior {
  VarianceVector mean_label;
};

inline JointPrior joint_prior_from_labels(const PseudoLabelSet& labels) {
  const int v = labels.labels.front().size();
  std::vector<double> mean(static_cast<std::size_t>(v), 0.0);
  for (const auto& row : labels.labels)
    for (int j = 0; j < v; ++j)
      mean[static_cast<std::size_t>(j)] += row[j];
  for (double& m : mean) m /= static_cast<double>(labels.labels.size());
  return JointPrior{VarianceVector(std::move(mean))};
}

/// sigma_tilde_v = alpha * max(sigma_v, 1): joints predicted noisier than
/// baseline keep their scale, everything else is raised to the baseline.
inline VarianceVector adjust_sigma(const VarianceVector& raw, double alpha) {
  if (!(alpha > 0)) throw ValidationError("adjust_sigma: alpha must be > 0");
  std::vector<double> out(static_cast<std::size_t>(raw.size()));
  for (int v = 0; v < raw.size(); ++v)
    out[static_cast<std::size_t>(v)] = alpha * std::max(raw[v], 1.0);
  return VarianceVector(std::move(out));
}

/// Substream address for one input sample.
struct SampleKey {
  std::uint64_t seed = 0;
  std::uint64_t sample_id = 0;
};

namespace detail {

constexpr std::uint64_t kStream2d = 0;
constexpr std::uint64_t kStream3d = 1;

}  // namespace detail

/// Draws S noisy copies of the input: each coordinate of joint v gets
/// independent N(0, sigma_tilde_v^2) noise. Hypothesis h always uses the
/// same substream, whatever S is requested.
inline std::vector<Pose2D> amplify_2d(const Pose2D& pose2d,
                                      const VarianceVector& sigma_tilde,
                                      int samples, const SampleKey& key) {
  if (samples < 1) throw ValidationError("amplify_2d: S must be >= 1");
  if (sigma_tilde.size() != pose2d.joint_count())
    throw ValidationError("amplify_2d: sigma length != joint count");
  std::vector<Pose2D> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int h = 0; h < samples; ++h) {
    Rng rng = Rng::keyed(key.seed, key.sample_id,
                         static_cast<std::uint64_t>(h), detail::kStream2d);
    std::vector<std::array<double, 2>> coords(
        static_cast<std::size_t>(pose2d.joint_count()));
    for (int v = 0; v < pose2d.joint_count(); ++v) {
      const double sigma = sigma_tilde[v];
      coords[static_cast<std::size_t>(v)] = {
          pose2d.joint(v)[0] + sigma * rng.normal(),
          pose2d.joint(v)[1] + sigma * rng.normal()};
    }
    out.emplace_back(std::move(coords));
  }
  return out;
}

/// Raw per-joint sigma for each strategy kind (before clamp-and-scale):
/// all-ones, the dataset joint prior, the variance net's per-sample mean
/// broadcast to every joint, or the full per-joint prediction.
inline VarianceVector raw_strategy_sigma(NoiseKind kind, const AvgModel* avg,
                                         const JointPrior* prior,
                                         const Pose2D& pose2d) {
  const int v = pose2d.joint_count();
  switch (kind) {
    case NoiseKind::kNoAdapted:
      return VarianceVector(std::vector<double>(static_cast<std::size_t>(v), 1.0));
    case NoiseKind::kJointsAdapted: {
      if (prior == nullptr)
        throw ConfigError("joints-adapted strategy needs a joint prior");
      if (prior->mean_label.size() != v)
        throw ValidationError("joint prior length != joint count");
      return prior->mean_label;
    }
    case NoiseKind::kSampleAdapted: {
      if (avg == nullptr)
        throw ConfigError("sample-adapted strategy needs a variance model");
      const VarianceVector full = predict_variance(*avg, pose2d);
      return VarianceVector(
          std::vector<double>(static_cast<std::size_t>(v), full.mean()));
    }
    case NoiseKind::kSampleJointsAdapted: {
      if (avg == nullptr)
        throw ConfigError("sample-joints strategy needs a variance model");
      return predict_variance(*avg, pose2d);
    }
  }
  throw ConfigError("bad noise kind");
}

/// Millimeters of 3D spread per unit of normalized 2D sigma under a pinhole
/// camera: the inverse of the projection's image-per-mm factor at the
/// subject distance. Used by the post-sample layer.
inline double post_sample_scale_mm(const Camera& camera) {
  return camera.subject_distance_mm / camera.focal;
}

/// Adds per-joint isotropic 3D noise to one lifted pose; sigma is given in
/// normalized 2D units and scaled to millimeters by scale_mm_per_unit.
inline std::vector<Pose3D> amplify_3d(const Pose3D& lifted,
                                      const VarianceVector& sigma_tilde,
                                      double scale_mm_per_unit, int samples,
                                      const SampleKey& key) {
  if (samples < 1) throw ValidationError("amplify_3d: S must be >= 1");
  if (sigma_tilde.size() != lifted.joint_count())
    throw ValidationError("amplify_3d: sigma length != joint count");
  std::vector<Pose3D> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int h = 0; h < samples; ++h) {
    Rng rng = Rng::keyed(key.seed, key.sample_id,
                         static_cast<std::uint64_t>(h), detail::kStream3d);
    std::vector<std::array<double, 3>> coords(
        static_cast<std::size_t>(lifted.joint_count()));
    for (int v = 0; v < lifted.joint_count(); ++v) {
      const double sigma_mm = sigma_tilde[v] * scale_mm_per_unit;
      coords[static_cast<std::size_t>(v)] = {
          lifted.joint(v)[0] + sigma_mm * rng.normal(),
          lifted.joint(v)[1] + sigma_mm * rng.normal(),
          lifted.joint(v)[2] + sigma_mm * rng.normal()};
    }
    out.push_back(root_center(coords));
  }
  return out;
}

/// Everything one hypothesis-generation call produces; the amplified 2D
/// samples back the hypothesis export format.
struct HypothesisBundle {
  Pose2D input;
  VarianceVector sigma_tilde;
  std::vector<Pose2D> amplified_2d;  // pre-sample layer only
  HypothesisSet hypotheses;
};

inline HypothesisBundle generate_hypothesis_bundle(
    const LifterModel& lifter, const AvgModel* avg, const JointPrior* prior,
    const Pose2D& pose2d, const NoiseStrategy& strategy, int samples,
    const SampleKey& key, double post_scale_mm_per_unit = 0.0) {
  strategy.validate();
  if (samples < 1)
    throw ValidationError("generate_hypotheses: S must be >= 1");
  if (2 * pose2d.joint_count() != lifter.network.spec().input_dim)
    throw ValidationError("generate_hypotheses: joint count mismatch");

  const VarianceVector raw =
      raw_strategy_sigma(strategy.kind, avg, prior, pose2d);
  const VarianceVector sigma = adjust_sigma(raw, strategy.alpha);

  if (strategy.layer == NoiseLayer::kPostSample) {
    if (!(post_scale_mm_per_unit > 0))
      throw ConfigError(
          "post-sample layer needs a positive 2D-to-mm scale factor");
    const Pose3D lifted = lift(lifter, pose2d);
    std::vector<Pose3D> hyps =
        amplify_3d(lifted, sigma, post_scale_mm_per_unit, samples, key);
    return HypothesisBundle{
        pose2d, sigma, {},
        HypothesisSet(std::move(hyps),
                      static_cast<std::int64_t>(key.sample_id))};
  }

  std::vector<Pose2D> amplified = amplify_2d(pose2d, sigma, samples, key);
  Eigen::MatrixXd inputs(samples, 2 * pose2d.joint_count());
  for (int h = 0; h < samples; ++h) {
    const std::vector<double> flat = amplified[static_cast<std::size_t>(h)].flat();
    for (std::size_t k = 0; k < flat.size(); ++k)
      inputs(h, static_cast<Eigen::Index>(k)) = flat[k];
  }
  const Eigen::MatrixXd lifted = lift_batch_raw(lifter, inputs);
  std::vector<Pose3D> hyps;
  hyps.reserve(static_cast<std::size_t>(samples));
  for (int h = 0; h < samples; ++h) hyps.push_back(pose3d_from_row(lifted, h));
  return HypothesisBundle{
      pose2d, sigma, std::move(amplified),
      HypothesisSet(std::move(hyps), static_cast<std::int64_t>(key.sample_id))};
}

inline HypothesisSet generate_hypotheses(
    const LifterModel& lifter, const AvgModel* avg, const JointPrior* prior,
    const Pose2D& pose2d, const NoiseStrategy& strategy, int samples,
    const SampleKey& key, double post_scale_mm_per_unit = 0.0) {
  return generate_hypothesis_bundle(lifter, avg, prior, pose2d, strategy,
                                    samples, key, post_scale_mm_per_unit)
      .hypotheses;
}

}  // namespace prpose
