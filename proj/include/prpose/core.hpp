// Shared domain types and elementary pose operations.
//
// Conventions used throughout the library:
//   - 2D poses live in normalized image units: the image is mapped to
//     [-1, 1] along its longer side, so coordinates are dimensionless.
//   - 3D poses are root-relative millimeters with the root at joint 0.
//   - All types are immutable values after construction.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace prpose {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Construction-time invariant violations (bad shapes, non-finite values).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ProjectionError : public Error {
 public:
  using Error::Error;
};

class FrozenModelError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(const std::string& what, int epoch)
      : Error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

class DegenerateLabelsError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Hashing (content addressing for datasets, checkpoints, cache keys).

inline std::uint64_t fnv1a64(const void* data, std::size_t size,
                             std::uint64_t h = 0xCBF29CE484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 0xCBF29CE484222325ULL) {
  return fnv1a64(s.data(), s.size(), h);
}

inline std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Skeleton

class Skeleton {
 public:
  static constexpr int kRootParent = -1;

  /// parent[0] must be the root sentinel (-1); bone_lengths_mm[v] is the
  /// parent[v]->v bone for v >= 1 (entry 0 is ignored).
  Skeleton(std::vector<int> parent, std::vector<double> bone_lengths_mm,
           std::vector<std::string> joint_names)
      : parent_(std::move(parent)),
        bone_lengths_(std::move(bone_lengths_mm)),
        joint_names_(std::move(joint_names)) {
    const int v = static_cast<int>(parent_.size());
    if (v < 2) throw ValidationError("skeleton needs at least 2 joints");
    if (bone_lengths_.size() != parent_.size() ||
        joint_names_.size() != parent_.size())
      throw ValidationError("skeleton field lengths disagree");
    if (parent_[0] != kRootParent)
      throw ValidationError("joint 0 must be the root");
    for (int j = 1; j < v; ++j) {
      if (parent_[j] < 0 || parent_[j] >= v || parent_[j] == j)
        throw ValidationError("parent index out of range at joint " +
                              std::to_string(j));
      if (!(bone_lengths_[j] > 0.0))
        throw ValidationError("non-positive bone length at joint " +
                              std::to_string(j));
    }
    // Every joint must reach the root without cycles.
    for (int j = 1; j < v; ++j) {
      int cur = j;
      int steps = 0;
      while (cur != 0) {
        cur = parent_[cur];
        if (cur == kRootParent || ++steps > v)
          throw ValidationError("parent indices do not form a tree rooted "
                                "at joint 0");
      }
    }
  }

  int joint_count() const { return static_cast<int>(parent_.size()); }
  int parent(int v) const { return parent_[v]; }
  double bone_length(int v) const { return bone_lengths_[v]; }
  const std::string& joint_name(int v) const { return joint_names_[v]; }

  /// Upper bound on root-to-joint distance: the longest root-to-joint path.
  double max_reach() const {
    double best = 0.0;
    for (int j = 1; j < joint_count(); ++j) {
      double path = 0.0;
      for (int cur = j; cur != 0; cur = parent_[cur]) path += bone_lengths_[cur];
      best = std::max(best, path);
    }
    return best;
  }

  /// Content hash over the canonical text form (names, parents, lengths).
  std::uint64_t hash() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t j = 0; j < parent_.size(); ++j)
      os << joint_names_[j] << ':' << parent_[j] << ':' << bone_lengths_[j]
         << ';';
    return fnv1a64(os.str());
  }

 private:
  std::vector<int> parent_;
  std::vector<double> bone_lengths_;
  std::vector<std::string> joint_names_;
};

// ---------------------------------------------------------------------------
// Poses

namespace detail {

template <std::size_t N>
inline void check_finite(const std::vector<std::array<double, N>>& coords,
                         const char* what) {
  for (const auto& c : coords)
    for (double x : c)
      if (!std::isfinite(x))
        throw ValidationError(std::string(what) + ": non-finite coordinate");
}

}  // namespace detail

/// V (u, v) pairs in normalized image units.
class Pose2D {
 public:
  Pose2D() = default;
  explicit Pose2D(std::vector<std::array<double, 2>> coords)
      : coords_(std::move(coords)) {
    if (coords_.empty()) throw ValidationError("Pose2D: empty");
    detail::check_finite(coords_, "Pose2D");
  }

  int joint_count() const { return static_cast<int>(coords_.size()); }
  const std::array<double, 2>& joint(int v) const { return coords_[v]; }
  const std::vector<std::array<double, 2>>& coords() const { return coords_; }

  /// Flattened [u0, v0, u1, v1, ...] layout used as network input.
  std::vector<double> flat() const {
    std::vector<double> out;
    out.reserve(coords_.size() * 2);
    for (const auto& c : coords_) {
      out.push_back(c[0]);
      out.push_back(c[1]);
    }
    return out;
  }

  static Pose2D from_flat(const std::vector<double>& flat) {
    if (flat.size() % 2 != 0)
      throw ValidationError("Pose2D::from_flat: odd length");
    std::vector<std::array<double, 2>> coords(flat.size() / 2);
    for (std::size_t v = 0; v < coords.size(); ++v)
      coords[v] = {flat[2 * v], flat[2 * v + 1]};
    return Pose2D(std::move(coords));
  }

  bool operator==(const Pose2D& other) const = default;

 private:
  std::vector<std::array<double, 2>> coords_;
};

/// V (X, Y, Z) triples in millimeters, root-relative.
class Pose3D {
 public:
  Pose3D() = default;
  explicit Pose3D(std::vector<std::array<double, 3>> coords)
      : coords_(std::move(coords)) {
    if (coords_.empty()) throw ValidationError("Pose3D: empty");
    detail::check_finite(coords_, "Pose3D");
  }

  int joint_count() const { return static_cast<int>(coords_.size()); }
  const std::array<double, 3>& joint(int v) const { return coords_[v]; }
  const std::vector<std::array<double, 3>>& coords() const { return coords_; }

  std::vector<double> flat() const {
    std::vector<double> out;
    out.reserve(coords_.size() * 3);
    for (const auto& c : coords_) {
      out.push_back(c[0]);
      out.push_back(c[1]);
      out.push_back(c[2]);
    }
    return out;
  }

  static Pose3D from_flat(const std::vector<double>& flat) {
    if (flat.size() % 3 != 0)
      throw ValidationError("Pose3D::from_flat: length not divisible by 3");
    std::vector<std::array<double, 3>> coords(flat.size() / 3);
    for (std::size_t v = 0; v < coords.size(); ++v)
      coords[v] = {flat[3 * v], flat[3 * v + 1], flat[3 * v + 2]};
    return Pose3D(std::move(coords));
  }

  bool operator==(const Pose3D& other) const = default;

 private:
  std::vector<std::array<double, 3>> coords_;
};

/// Translates a raw pose so the root joint (index 0) sits exactly at the
/// origin. Bone vectors are unchanged; idempotent.
inline Pose3D root_center(const std::vector<std::array<double, 3>>& raw) {
  if (raw.empty()) throw ValidationError("root_center: empty pose");
  detail::check_finite(raw, "root_center");
  const auto root = raw[0];
  std::vector<std::array<double, 3>> out(raw.size());
  for (std::size_t v = 0; v < raw.size(); ++v)
    out[v] = {raw[v][0] - root[0], raw[v][1] - root[1], raw[v][2] - root[2]};
  return Pose3D(std::move(out));
}

inline Pose3D root_center(const Pose3D& pose) {
  return root_center(pose.coords());
}

// ---------------------------------------------------------------------------
// Hypotheses and variances

/// Ordered set of S 3D hypotheses for one input sample.
class HypothesisSet {
 public:
  HypothesisSet(std::vector<Pose3D> hypotheses, std::int64_t source_sample_id)
      : hypotheses_(std::move(hypotheses)), source_sample_id_(source_sample_id) {
    if (hypotheses_.empty())
      throw ValidationError("HypothesisSet: needs at least one hypothesis");
    const int v = hypotheses_.front().joint_count();
    for (const auto& h : hypotheses_)
      if (h.joint_count() != v)
        throw ValidationError("HypothesisSet: joint counts disagree");
  }

  int size() const { return static_cast<int>(hypotheses_.size()); }
  int joint_count() const { return hypotheses_.front().joint_count(); }
  const Pose3D& hypothesis(int i) const { return hypotheses_[i]; }
  const std::vector<Pose3D>& hypotheses() const { return hypotheses_; }
  std::int64_t source_sample_id() const { return source_sample_id_; }

 private:
  std::vector<Pose3D> hypotheses_;
  std::int64_t source_sample_id_ = 0;
};

/// Per-joint standard deviations (dimensionless, normalized image units).
///
/// Values are validated finite; sign is the producer's contract. Pseudo-labels
/// and adjusted sigmas are non-negative by construction, while raw variance
/// network outputs may carry negative entries until clamped.
class VarianceVector {
 public:
  VarianceVector() = default;
  explicit VarianceVector(std::vector<double> sigmas)
      : sigmas_(std::move(sigmas)) {
    if (sigmas_.empty()) throw ValidationError("VarianceVector: empty");
    for (double s : sigmas_)
      if (!std::isfinite(s))
        throw ValidationError("VarianceVector: non-finite value");
  }

  int size() const { return static_cast<int>(sigmas_.size()); }
  double operator[](int v) const { return sigmas_[v]; }
  const std::vector<double>& values() const { return sigmas_; }

  double mean() const {
    double total = 0.0;
    for (double s : sigmas_) total += s;
    return total / static_cast<double>(sigmas_.size());
  }

  bool operator==(const VarianceVector& other) const = default;

 private:
  std::vector<double> sigmas_;
};

}  // namespace prpose
