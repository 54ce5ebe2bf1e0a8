#include "prpose/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "prpose/rng.hpp"

using namespace prpose;

namespace {

Pose3D random_pose(int joints, Rng& rng, double scale = 400.0) {
  std::vector<std::array<double, 3>> coords(joints);
  coords[0] = {0, 0, 0};
  for (int j = 1; j < joints; ++j)
    coords[j] = {rng.uniform(-scale, scale), rng.uniform(-scale, scale),
                 rng.uniform(-scale, scale)};
  return Pose3D(std::move(coords));
}

// Scalar oracle: per-joint norm, then mean, with plain loops.
double mpjpe_oracle(const Pose3D& pred, const Pose3D& gt) {
  double total = 0;
  for (int v = 0; v < pred.joint_count(); ++v) {
    double s = 0;
    for (int k = 0; k < 3; ++k)
      s += (pred.joint(v)[k] - gt.joint(v)[k]) * (pred.joint(v)[k] - gt.joint(v)[k]);
    total += std::sqrt(s);
  }
  return total / pred.joint_count();
}

Pose3D transform_pose(const Pose3D& p, double angle_z, double scale,
                      std::array<double, 3> t) {
  const double c = std::cos(angle_z), s = std::sin(angle_z);
  std::vector<std::array<double, 3>> out(p.joint_count());
  for (int j = 0; j < p.joint_count(); ++j) {
    const auto& q = p.joint(j);
    out[j] = {scale * (c * q[0] - s * q[1]) + t[0],
              scale * (s * q[0] + c * q[1]) + t[1], scale * q[2] + t[2]};
  }
  return Pose3D(std::move(out));
}

}  // namespace

TEST(Mpjpe, IdenticalPosesGiveZero) {
  Rng rng(1);
  Pose3D p = random_pose(16, rng);
  EXPECT_DOUBLE_EQ(mpjpe(p, p), 0.0);
}

TEST(Mpjpe, SingleOffsetJointMeanArithmetic) {
  Rng rng(2);
  Pose3D gt = random_pose(16, rng);
  auto coords = gt.coords();
  coords[5][0] += 3.0;
  Pose3D pred(coords);
  EXPECT_NEAR(mpjpe(pred, gt), 3.0 / 16.0, 1e-12);
}

TEST(Mpjpe, MatchesScalarOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Pose3D a = random_pose(16, rng);
    Pose3D b = random_pose(16, rng);
    EXPECT_NEAR(mpjpe(a, b), mpjpe_oracle(a, b), 1e-12);
  }
}

TEST(Mpjpe, RejectsJointCountMismatch) {
  Rng rng(4);
  EXPECT_THROW(mpjpe(random_pose(16, rng), random_pose(15, rng)),
               ValidationError);
}

TEST(Procrustes, RecoversSimilarityTransform) {
  Rng rng(5);
  Pose3D gt = random_pose(16, rng);
  Pose3D pred = transform_pose(gt, 30.0 * 3.14159265358979 / 180.0, 1.2,
                               {5, 5, 5});
  Pose3D aligned = procrustes_align(pred, gt);
  EXPECT_LT(mpjpe(aligned, gt), 1e-9);
}

TEST(Procrustes, IdentityWhenAlreadyAligned) {
  Rng rng(6);
  Pose3D gt = random_pose(16, rng);
  Pose3D aligned = procrustes_align(gt, gt);
  for (int j = 0; j < 16; ++j)
    for (int k = 0; k < 3; ++k)
      EXPECT_NEAR(aligned.joint(j)[k], gt.joint(j)[k], 1e-12);
}

TEST(Procrustes, NeverWorseThanIdentityCandidate) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Pose3D pred = random_pose(16, rng);
    Pose3D gt = random_pose(16, rng);
    EXPECT_LE(mpjpe(procrustes_align(pred, gt), gt),
              mpjpe(root_center(pred), gt) + 1e-9);
  }
}

TEST(Procrustes, DegenerateInputsAreErrors) {
  Pose3D flat(std::vector<std::array<double, 3>>(16, {0, 0, 0}));
  Rng rng(8);
  Pose3D gt = random_pose(16, rng);
  EXPECT_THROW(procrustes_align(flat, gt), AlignmentError);

  // Collinear points leave the rotation under-determined.
  std::vector<std::array<double, 3>> line(16);
  for (int j = 0; j < 16; ++j) line[j] = {static_cast<double>(j), 0, 0};
  EXPECT_THROW(procrustes_align(Pose3D(line), gt), AlignmentError);

  Pose3D two({{{0, 0, 0}}, {{1, 1, 1}}});
  EXPECT_THROW(procrustes_align(two, two), AlignmentError);
}

TEST(MinMpjpe, SingletonEqualsMpjpe) {
  Rng rng(9);
  Pose3D gt = random_pose(16, rng);
  Pose3D pred = random_pose(16, rng);
  HypothesisSet set({pred}, 0);
  EXPECT_DOUBLE_EQ(min_mpjpe(set, gt, EvalProtocol{}), mpjpe(pred, gt));
}

TEST(MinMpjpe, PerfectHypothesisGivesZero) {
  Rng rng(10);
  Pose3D gt = random_pose(16, rng);
  HypothesisSet set({random_pose(16, rng), gt, random_pose(16, rng)}, 0);
  EXPECT_DOUBLE_EQ(min_mpjpe(set, gt, EvalProtocol{}), 0.0);
}

TEST(MinMpjpe, MatchesBruteForceEnumeration) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Pose3D gt = random_pose(16, rng);
    std::vector<Pose3D> hyps;
    for (int i = 0; i < 10; ++i) hyps.push_back(random_pose(16, rng));
    HypothesisSet set(hyps, 0);
    double brute = std::numeric_limits<double>::infinity();
    for (const auto& h : hyps) brute = std::min(brute, mpjpe_oracle(h, gt));
    EXPECT_DOUBLE_EQ(min_mpjpe(set, gt, EvalProtocol{}), brute);
  }
}

TEST(MinMpjpe, PermutationInvariantValue) {
  Rng rng(12);
  Pose3D gt = random_pose(16, rng);
  std::vector<Pose3D> hyps;
  for (int i = 0; i < 8; ++i) hyps.push_back(random_pose(16, rng));
  HypothesisSet forward(hyps, 0);
  std::vector<Pose3D> reversed(hyps.rbegin(), hyps.rend());
  HypothesisSet backward(reversed, 0);
  EXPECT_DOUBLE_EQ(min_mpjpe(forward, gt, EvalProtocol{}),
                   min_mpjpe(backward, gt, EvalProtocol{}));
}

TEST(MinMpjpe, TieBreaksToLowestIndex) {
  Rng rng(13);
  Pose3D gt = random_pose(16, rng);
  Pose3D pred = random_pose(16, rng);
  HypothesisSet set({pred, pred, pred}, 0);
  EXPECT_EQ(best_hypothesis(set, gt, ProtocolKind::kP1).index, 0);
}

TEST(JBest, SingletonEqualsMpjpe) {
  Rng rng(14);
  Pose3D gt = random_pose(16, rng);
  Pose3D pred = random_pose(16, rng);
  HypothesisSet set({pred}, 0);
  EXPECT_DOUBLE_EQ(j_best_mpjpe(set, gt), mpjpe(pred, gt));
}

TEST(JBest, DisjointPerfectHalvesGiveZero) {
  Rng rng(15);
  Pose3D gt = random_pose(16, rng);
  auto a = gt.coords();
  auto b = gt.coords();
  for (int j = 0; j < 8; ++j) a[j][0] += 100.0;   // first half wrong in a
  for (int j = 8; j < 16; ++j) b[j][0] += 100.0;  // second half wrong in b
  HypothesisSet set({Pose3D(a), Pose3D(b)}, 0);
  EXPECT_DOUBLE_EQ(j_best_mpjpe(set, gt), 0.0);
}

TEST(JBest, NeverExceedsPBest) {
  Rng rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    Pose3D gt = random_pose(16, rng);
    std::vector<Pose3D> hyps;
    for (int i = 0; i < 6; ++i) hyps.push_back(random_pose(16, rng));
    HypothesisSet set(hyps, 0);
    EXPECT_LE(j_best_mpjpe(set, gt),
              min_mpjpe(set, gt, EvalProtocol{}) + 1e-12);
  }
}

TEST(Pck, PerfectHypothesisGivesOne) {
  Rng rng(17);
  Pose3D gt = random_pose(16, rng);
  HypothesisSet set({gt, random_pose(16, rng)}, 0);
  EXPECT_DOUBLE_EQ(pck(set, gt, EvalProtocol{}), 1.0);
}

TEST(Pck, AllJointsBeyondThresholdGiveZero) {
  Rng rng(18);
  Pose3D gt = random_pose(16, rng);
  auto coords = gt.coords();
  for (auto& c : coords) c[1] += 500.0;  // every joint off by 500 mm
  HypothesisSet set({Pose3D(coords)}, 0);
  EXPECT_DOUBLE_EQ(pck(set, gt, EvalProtocol{}), 0.0);
}

TEST(Pck, CountsJointsWithinThreshold) {
  Rng rng(19);
  Pose3D gt = random_pose(16, rng);
  auto coords = gt.coords();
  for (int j = 0; j < 8; ++j) coords[j][2] += 400.0;  // half outside 150 mm
  HypothesisSet set({Pose3D(coords)}, 0);
  EXPECT_DOUBLE_EQ(pck(set, gt, EvalProtocol{}), 0.5);
}

TEST(Pck, ExactThresholdCountsAsIncorrect) {
  Pose3D gt(std::vector<std::array<double, 3>>{
      {0, 0, 0}, {100, 0, 0}, {0, 100, 0}, {0, 0, 100}});
  auto coords = gt.coords();
  coords[1][0] += 150.0;  // exactly at the threshold
  HypothesisSet set({Pose3D(coords)}, 0);
  EXPECT_DOUBLE_EQ(pck(set, gt, EvalProtocol{}), 3.0 / 4.0);
}

TEST(Protocol, P2NeverWorseThanP1PerHypothesis) {
  Rng rng(20);
  for (int trial = 0; trial < 100; ++trial) {
    Pose3D gt = random_pose(16, rng);
    Pose3D pred = random_pose(16, rng);
    EXPECT_LE(protocol_mpjpe(pred, gt, ProtocolKind::kP2),
              protocol_mpjpe(root_center(pred), gt, ProtocolKind::kP1) + 1e-9);
  }
}

TEST(Protocol, ValidatesThreshold) {
  EvalProtocol bad;
  bad.pck_threshold_mm = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
}
