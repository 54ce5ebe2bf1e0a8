// Evaluation metrics: MPJPE (Protocol #1), Procrustes-aligned MPJPE
// (Protocol #2, full similarity: rotation + translation + scale),
// multi-hypothesis selection (P-Best / J-Best), and PCK.
//
// All functions are pure; inputs are root-relative poses in millimeters.
#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <vector>

#include "prpose/core.hpp"

namespace prpose {

enum class ProtocolKind { kP1, kP2 };
enum class Selection { kPBest, kJBest };

struct EvalProtocol {
  ProtocolKind kind = ProtocolKind::kP1;
  Selection selection = Selection::kPBest;
  double pck_threshold_mm = 150.0;

  void validate() const {
    if (!(pck_threshold_mm > 0))
      throw ValidationError("EvalProtocol: threshold must be > 0");
  }
};

inline double joint_error_mm(const Pose3D& pred, const Pose3D& gt, int v) {
  const auto& a = pred.joint(v);
  const auto& b = gt.joint(v);
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Mean per-joint position error in millimeters.
inline double mpjpe(const Pose3D& pred, const Pose3D& gt) {
  if (pred.joint_count() != gt.joint_count())
    throw ValidationError("mpjpe: joint counts disagree");
  double total = 0.0;
  for (int v = 0; v < pred.joint_count(); ++v)
    total += joint_error_mm(pred, gt, v);
  return total / static_cast<double>(pred.joint_count());
}

/// Least-squares similarity alignment of pred onto gt: returns s*R*pred + t
/// with proper rotation R (det +1, reflections corrected via the SVD),
/// scale s > 0, and translation t.
inline Pose3D procrustes_align(const Pose3D& pred, const Pose3D& gt) {
  const int v = pred.joint_count();
  if (v != gt.joint_count())
    throw ValidationError("procrustes_align: joint counts disagree");
  if (v < 3)
    throw AlignmentError("procrustes_align: need at least 3 joints");

  Eigen::MatrixXd p(v, 3), g(v, 3);
  for (int j = 0; j < v; ++j) {
    p.row(j) << pred.joint(j)[0], pred.joint(j)[1], pred.joint(j)[2];
    g.row(j) << gt.joint(j)[0], gt.joint(j)[1], gt.joint(j)[2];
  }
  const Eigen::RowVector3d mu_p = p.colwise().mean();
  const Eigen::RowVector3d mu_g = g.colwise().mean();
  p.rowwise() -= mu_p;
  g.rowwise() -= mu_g;

  const double pred_ss = p.squaredNorm();
  if (!(pred_ss > 0))
    throw AlignmentError("procrustes_align: all predicted joints coincide");

  const Eigen::Matrix3d m = g.transpose() * p;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv(0) > 0) || sv(1) <= sv(0) * 1e-12)
    throw AlignmentError("procrustes_align: rank-deficient cross-covariance");

  Eigen::Vector3d d(1, 1, 1);
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2) = -1;
  const Eigen::Matrix3d rot =
      svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  const double scale = sv.dot(d) / pred_ss;
  const Eigen::RowVector3d t =
      mu_g - scale * (rot * mu_p.transpose()).transpose();

  std::vector<std::array<double, 3>> out(static_cast<std::size_t>(v));
  for (int j = 0; j < v; ++j) {
    const Eigen::RowVector3d row =
        scale * ((rot * (p.row(j) + mu_p).transpose()).transpose()) + t;
    out[static_cast<std::size_t>(j)] = {row(0), row(1), row(2)};
  }
  return Pose3D(std::move(out));
}

/// Per-hypothesis error under the chosen protocol.
inline double protocol_mpjpe(const Pose3D& pred, const Pose3D& gt,
                             ProtocolKind kind) {
  if (kind == ProtocolKind::kP2) return mpjpe(procrustes_align(pred, gt), gt);
  return mpjpe(pred, gt);
}

struct BestHypothesis {
  double value_mm = 0.0;
  int index = 0;  // ties resolved to the lowest hypothesis index
};

inline BestHypothesis best_hypothesis(const HypothesisSet& hyps,
                                      const Pose3D& gt, ProtocolKind kind) {
  if (hyps.joint_count() != gt.joint_count())
    throw ValidationError("best_hypothesis: joint counts disagree");
  BestHypothesis best{std::numeric_limits<double>::infinity(), 0};
  for (int i = 0; i < hyps.size(); ++i) {
    const double err = protocol_mpjpe(hyps.hypothesis(i), gt, kind);
    if (err < best.value_mm) best = {err, i};
  }
  return best;
}

/// Minimum MPJPE over the hypothesis set (P-Best).
inline double min_mpjpe(const HypothesisSet& hyps, const Pose3D& gt,
                        const EvalProtocol& protocol) {
  return best_hypothesis(hyps, gt, protocol.kind).value_mm;
}

/// Per-joint minimum error across hypotheses, averaged over joints.
inline double j_best_mpjpe(const HypothesisSet& hyps, const Pose3D& gt,
                           ProtocolKind kind = ProtocolKind::kP1) {
  if (hyps.joint_count() != gt.joint_count())
    throw ValidationError("j_best_mpjpe: joint counts disagree");
  const int v = gt.joint_count();
  std::vector<double> best(static_cast<std::size_t>(v),
                           std::numeric_limits<double>::infinity());
  for (int i = 0; i < hyps.size(); ++i) {
    const Pose3D scored = kind == ProtocolKind::kP2
                              ? procrustes_align(hyps.hypothesis(i), gt)
                              : hyps.hypothesis(i);
    for (int j = 0; j < v; ++j)
      best[static_cast<std::size_t>(j)] =
          std::min(best[static_cast<std::size_t>(j)], joint_error_mm(scored, gt, j));
  }
  double total = 0.0;
  for (double b : best) total += b;
  return total / static_cast<double>(v);
}

/// Selects the best hypothesis by Protocol #1 MPJPE, then reports the
/// fraction of its joints with error strictly below the threshold.
inline double pck(const HypothesisSet& hyps, const Pose3D& gt,
                  const EvalProtocol& protocol) {
  protocol.validate();
  const BestHypothesis best = best_hypothesis(hyps, gt, ProtocolKind::kP1);
  const Pose3D& chosen = hyps.hypothesis(best.index);
  int correct = 0;
  for (int j = 0; j < gt.joint_count(); ++j)
    if (joint_error_mm(chosen, gt, j) < protocol.pck_threshold_mm) ++correct;
  return static_cast<double>(correct) / static_cast<double>(gt.joint_count());
}

}  // namespace prpose
