#pragma once

#include <string>
#include <vector>

#include "sgrom/model_problem.hpp"

namespace sgrom {

enum class SnapshotKind { primal, adjoint, sensitivity };

std::string to_string(SnapshotKind kind);

struct SnapshotRecord {
  Vector y;
  Vector mu;
  SnapshotKind kind = SnapshotKind::primal;
  bool dropped = false;
};

/// Orthonormal snapshot basis shared by the primal and adjoint reduced
/// models. Columns are only ever appended.
class ReducedBasis {
 public:
  static constexpr double kDropTolerance = 1e-10;

  ReducedBasis() = default;
  explicit ReducedBasis(Eigen::Index state_dim);

  Eigen::Index state_dim() const { return columns_.rows(); }
  Eigen::Index size() const { return columns_.cols(); }
  bool empty() const { return columns_.cols() == 0; }
  const Matrix& columns() const { return columns_; }
  const std::vector<SnapshotRecord>& provenance() const { return provenance_; }

  /// Orthogonalizes v against the basis (two Gram-Schmidt passes) and
  /// appends the normalized remainder unless it is below kDropTolerance
  /// times |v|. Returns true if a column was added.
  bool append(const Vector& v, SnapshotRecord record);

  /// Appends several vectors in order; returns the number of columns added.
  int append_snapshots(const std::vector<Vector>& vectors, const std::vector<SnapshotRecord>& records);

  /// max |Phi^T Phi - I|
  double orthonormality_error() const;

  /// Points at which HDM snapshots were computed.
  bool sampled(const Vector& y, const Vector& mu) const;
  void mark_sampled(const Vector& y, const Vector& mu);
  std::size_t sampled_count() const { return sampled_.size(); }

 private:
  Matrix columns_;
  std::vector<SnapshotRecord> provenance_;
  std::vector<std::pair<Vector, Vector>> sampled_;
};

}  // namespace sgrom
