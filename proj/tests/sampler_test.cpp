#include "prpose/sampler.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "prpose/metrics.hpp"
#include "prpose/rng.hpp"
#include "prpose/synthgen.hpp"

using namespace prpose;

namespace {

struct Fixture {
  std::vector<DatasetRecord> records;
  LifterModel lifter;
  AvgModel avg;
  JointPrior prior;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    DatasetConfig config = reference_dataset_config(97);
    config.sample_count = 400;
    out.records = generate_records(config);

    LifterTrainConfig lc;
    lc.hidden_dim = 32;
    lc.block_count = 1;
    lc.epochs = 8;
    lc.batch_size = 64;
    lc.seed = 4;
    out.lifter = train_lifter(out.records, lc);

    PseudoLabelSet labels = compute_pseudo_labels(out.lifter, out.records);
    AvgTrainConfig ac;
    ac.hidden_dim = 32;
    ac.block_count = 1;
    ac.epochs = 10;
    ac.batch_size = 64;
    ac.seed = 6;
    out.avg = train_avg(out.records, labels, ac, AvgParadigm::kIndependent);
    out.prior = joint_prior_from_labels(labels);
    return out;
  }();
  return f;
}

// Variance net that outputs exactly one for every joint.
AvgModel all_ones_avg(int joints) {
  AvgModel model;
  model.network = Network(NetSpec{2 * joints, joints, 4, 0});
  auto& head = model.network.mutable_layer(1);
  head.bias = Eigen::VectorXd::Ones(joints);
  model.network.freeze();
  return model;
}

VarianceVector ones(int n) {
  return VarianceVector(std::vector<double>(n, 1.0));
}

VarianceVector zeros(int n) {
  return VarianceVector(std::vector<double>(n, 0.0));
}

}  // namespace

TEST(AdjustSigma, ClampAndScaleBranches) {
  VarianceVector raw({0.5, 2.0, -3.0});
  VarianceVector a = adjust_sigma(raw, 0.01);
  EXPECT_DOUBLE_EQ(a[0], 0.01);  // clamped to 1, then scaled
  EXPECT_DOUBLE_EQ(a[1], 0.02);  // above 1, scaled directly
  VarianceVector b = adjust_sigma(raw, 0.005);
  EXPECT_DOUBLE_EQ(b[2], 0.005);  // negative clamps to 1
  for (int v = 0; v < b.size(); ++v) EXPECT_GT(b[v], 0.0);
  EXPECT_THROW(adjust_sigma(raw, 0.0), ValidationError);
}

TEST(Amplify2d, ZeroSigmaGivesExactCopies) {
  const Pose2D& input = fixture().records.front().detected_pose2d;
  std::vector<Pose2D> samples =
      amplify_2d(input, zeros(16), 5, SampleKey{1, 0});
  ASSERT_EQ(samples.size(), 5u);
  for (const auto& s : samples) EXPECT_EQ(s, input);
}

TEST(Amplify2d, DeterministicGivenKey) {
  const Pose2D& input = fixture().records.front().detected_pose2d;
  VarianceVector sigma = ones(16);
  auto a = amplify_2d(input, sigma, 7, SampleKey{42, 3});
  auto b = amplify_2d(input, sigma, 7, SampleKey{42, 3});
  auto c = amplify_2d(input, sigma, 7, SampleKey{42, 4});
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Amplify2d, PrefixStableAcrossSampleCounts) {
  const Pose2D& input = fixture().records.front().detected_pose2d;
  VarianceVector sigma = ones(16);
  auto small = amplify_2d(input, sigma, 5, SampleKey{11, 2});
  auto large = amplify_2d(input, sigma, 20, SampleKey{11, 2});
  for (std::size_t i = 0; i < small.size(); ++i)
    EXPECT_EQ(small[i], large[i]);
}

TEST(Amplify2d, EmpiricalMomentsMatch) {
  // 100k draws on one joint: std within 2% per coordinate, and the two
  // coordinates uncorrelated.
  Pose2D input(std::vector<std::array<double, 2>>{{0.0, 0.0}});
  const double sigma = 0.013;
  VarianceVector sv(std::vector<double>{sigma});
  const int n = 100000;
  auto samples = amplify_2d(input, sv, n, SampleKey{87, 0});
  double su = 0, sv2 = 0, suu = 0, svv = 0, suv = 0;
  for (const auto& s : samples) {
    const double u = s.joint(0)[0], w = s.joint(0)[1];
    su += u;
    sv2 += w;
    suu += u * u;
    svv += w * w;
    suv += u * w;
  }
  const double mu = su / n, mw = sv2 / n;
  const double var_u = suu / n - mu * mu;
  const double var_w = svv / n - mw * mw;
  const double cov = suv / n - mu * mw;
  EXPECT_NEAR(std::sqrt(var_u), sigma, 0.02 * sigma);
  EXPECT_NEAR(std::sqrt(var_w), sigma, 0.02 * sigma);
  EXPECT_LT(std::abs(cov / std::sqrt(var_u * var_w)), 0.01);
}

TEST(RawStrategySigma, KindConstructions) {
  const Fixture& f = fixture();
  const Pose2D& input = f.records.front().detected_pose2d;

  VarianceVector no = raw_strategy_sigma(NoiseKind::kNoAdapted, nullptr,
                                         nullptr, input);
  EXPECT_EQ(no, ones(16));

  VarianceVector joints = raw_strategy_sigma(NoiseKind::kJointsAdapted,
                                             nullptr, &f.prior, input);
  EXPECT_EQ(joints, f.prior.mean_label);
  EXPECT_NEAR(joints.mean(), 1.0, 1e-9);

  VarianceVector sample = raw_strategy_sigma(NoiseKind::kSampleAdapted,
                                             &f.avg, nullptr, input);
  VarianceVector sja = raw_strategy_sigma(NoiseKind::kSampleJointsAdapted,
                                          &f.avg, nullptr, input);
  // Broadcast construction preserves the per-sample mean.
  EXPECT_NEAR(sample.mean(), sja.mean(), 1e-12);
  for (int v = 1; v < sample.size(); ++v)
    EXPECT_DOUBLE_EQ(sample[v], sample[0]);

  EXPECT_THROW(
      raw_strategy_sigma(NoiseKind::kSampleAdapted, nullptr, nullptr, input),
      ConfigError);
  EXPECT_THROW(
      raw_strategy_sigma(NoiseKind::kJointsAdapted, nullptr, nullptr, input),
      ConfigError);
}

TEST(GenerateHypotheses, ShapeAndRootCentering) {
  const Fixture& f = fixture();
  const Pose2D& input = f.records[3].detected_pose2d;
  for (NoiseKind kind :
       {NoiseKind::kNoAdapted, NoiseKind::kJointsAdapted,
        NoiseKind::kSampleAdapted, NoiseKind::kSampleJointsAdapted}) {
    NoiseStrategy strategy{kind, 0.005, NoiseLayer::kPreSample};
    HypothesisSet set = generate_hypotheses(f.lifter, &f.avg, &f.prior, input,
                                            strategy, 6, SampleKey{1, 3});
    EXPECT_EQ(set.size(), 6);
    EXPECT_EQ(set.source_sample_id(), 3);
    for (const auto& h : set.hypotheses())
      EXPECT_EQ(h.joint(0), (std::array<double, 3>{0, 0, 0}));
  }
}

TEST(GenerateHypotheses, VanishingAlphaCollapsesToSingleHypothesis) {
  const Fixture& f = fixture();
  const Pose2D& input = f.records[5].detected_pose2d;
  NoiseStrategy strategy{NoiseKind::kSampleJointsAdapted, 1e-12,
                         NoiseLayer::kPreSample};
  HypothesisSet set = generate_hypotheses(f.lifter, &f.avg, nullptr, input,
                                          strategy, 1, SampleKey{1, 5});
  const Pose3D single = lift(f.lifter, input);
  EXPECT_LT(mpjpe(set.hypothesis(0), single), 1e-3);
}

TEST(GenerateHypotheses, StrategiesCoincideAtAllOnesFixedPoint) {
  const Fixture& f = fixture();
  AvgModel ones_avg = all_ones_avg(16);
  JointPrior ones_prior{ones(16)};
  const Pose2D& input = f.records[7].detected_pose2d;
  NoiseStrategy base{NoiseKind::kNoAdapted, 0.005, NoiseLayer::kPreSample};
  HypothesisSet reference = generate_hypotheses(
      f.lifter, &ones_avg, &ones_prior, input, base, 4, SampleKey{9, 7});
  for (NoiseKind kind :
       {NoiseKind::kJointsAdapted, NoiseKind::kSampleAdapted,
        NoiseKind::kSampleJointsAdapted}) {
    NoiseStrategy strategy{kind, 0.005, NoiseLayer::kPreSample};
    HypothesisSet set = generate_hypotheses(f.lifter, &ones_avg, &ones_prior,
                                            input, strategy, 4, SampleKey{9, 7});
    for (int i = 0; i < 4; ++i)
      EXPECT_EQ(set.hypothesis(i), reference.hypothesis(i));
  }
}

TEST(GenerateHypotheses, NestedSamplingMonotonicity) {
  const Fixture& f = fixture();
  NoiseStrategy strategy{NoiseKind::kSampleJointsAdapted, 0.01,
                         NoiseLayer::kPreSample};
  EvalProtocol protocol;
  for (int i = 0; i < 10; ++i) {
    const auto& rec = f.records[static_cast<std::size_t>(i)];
    double prev = std::numeric_limits<double>::infinity();
    for (int s : {1, 5, 10, 25}) {
      HypothesisSet set =
          generate_hypotheses(f.lifter, &f.avg, nullptr, rec.detected_pose2d,
                              strategy, s, SampleKey{33, static_cast<std::uint64_t>(i)});
      const double err = min_mpjpe(set, rec.gt_pose3d, protocol);
      EXPECT_LE(err, prev + 1e-12);
      prev = err;
    }
  }
}

TEST(PostSample, ZeroSigmaGivesCopiesOfSingleLift) {
  const Fixture& f = fixture();
  const Pose2D& input = f.records[2].detected_pose2d;
  const Pose3D lifted = lift(f.lifter, input);
  std::vector<Pose3D> hyps =
      amplify_3d(lifted, zeros(16), 4000.0, 5, SampleKey{3, 2});
  for (const auto& h : hyps) EXPECT_EQ(h, lifted);
}

TEST(PostSample, StrategyProducesRootCenteredHypotheses) {
  const Fixture& f = fixture();
  const Pose2D& input = f.records[4].detected_pose2d;
  NoiseStrategy strategy{NoiseKind::kSampleJointsAdapted, 0.005,
                         NoiseLayer::kPostSample};
  const double scale = post_sample_scale_mm(Camera{1.0, {0, 0}, 4000.0});
  EXPECT_DOUBLE_EQ(scale, 4000.0);
  HypothesisSet set = generate_hypotheses(f.lifter, &f.avg, nullptr, input,
                                          strategy, 8, SampleKey{5, 4}, scale);
  EXPECT_EQ(set.size(), 8);
  for (const auto& h : set.hypotheses())
    EXPECT_EQ(h.joint(0), (std::array<double, 3>{0, 0, 0}));
  // Hypotheses actually differ from the deterministic lift.
  const Pose3D single = lift(f.lifter, input);
  EXPECT_GT(mpjpe(set.hypothesis(0), single), 0.0);

  EXPECT_THROW(generate_hypotheses(f.lifter, &f.avg, nullptr, input, strategy,
                                   8, SampleKey{5, 4}, 0.0),
               ConfigError);
}

TEST(GenerateHypotheses, RejectsBadArguments) {
  const Fixture& f = fixture();
  const Pose2D& input = f.records.front().detected_pose2d;
  NoiseStrategy strategy;
  EXPECT_THROW(generate_hypotheses(f.lifter, &f.avg, nullptr, input, strategy,
                                   0, SampleKey{1, 0}),
               ValidationError);
  Pose2D wrong(std::vector<std::array<double, 2>>(5, {0.0, 0.0}));
  EXPECT_THROW(generate_hypotheses(f.lifter, &f.avg, nullptr, wrong, strategy,
                                   3, SampleKey{1, 0}),
               ValidationError);
}

TEST(JointPrior, InheritsMeanOneNormalization) {
  const Fixture& f = fixture();
  EXPECT_NEAR(f.prior.mean_label.mean(), 1.0, 1e-9);
  EXPECT_EQ(f.prior.mean_label.size(), 16);
}
