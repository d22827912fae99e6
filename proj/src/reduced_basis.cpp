#include "sgrom/reduced_basis.hpp"

#include <stdexcept>

namespace sgrom {

std::string to_string(SnapshotKind kind) {
  switch (kind) {
    case SnapshotKind::primal: return "primal";
    case SnapshotKind::adjoint: return "adjoint";
    case SnapshotKind::sensitivity: return "sensitivity";
  }
  return "unknown";
}

ReducedBasis::ReducedBasis(Eigen::Index state_dim) : columns_(state_dim, 0) {}

bool ReducedBasis::append(const Vector& v, SnapshotRecord record) {
  if (v.size() != state_dim()) throw std::invalid_argument("ReducedBasis::append: dimension mismatch");
  if (!v.allFinite()) throw std::invalid_argument("ReducedBasis::append: non-finite snapshot");
  const double norm0 = v.norm();
  Vector w = v;
  for (int pass = 0; pass < 2; ++pass)
    if (size() > 0) w -= columns_ * (columns_.transpose() * w);
  const double norm1 = w.norm();
  record.dropped = !(norm1 > kDropTolerance * norm0) || size() == state_dim();
  if (!record.dropped) {
    columns_.conservativeResize(Eigen::NoChange, size() + 1);
    columns_.col(size() - 1) = w / norm1;
  }
  provenance_.push_back(std::move(record));
  return !provenance_.back().dropped;
}

int ReducedBasis::append_snapshots(const std::vector<Vector>& vectors,
                                   const std::vector<SnapshotRecord>& records) {
  if (vectors.size() != records.size())
    throw std::invalid_argument("append_snapshots: one provenance record per vector required");
  int added = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) added += append(vectors[i], records[i]) ? 1 : 0;
  return added;
}

double ReducedBasis::orthonormality_error() const {
  if (empty()) return 0.0;
  const Matrix g = columns_.transpose() * columns_;
  return (g - Matrix::Identity(size(), size())).cwiseAbs().maxCoeff();
}

bool ReducedBasis::sampled(const Vector& y, const Vector& mu) const {
  for (const auto& [sy, smu] : sampled_)
    if (sy.size() == y.size() && smu.size() == mu.size() && sy == y && smu == mu) return true;
  return false;
}

void ReducedBasis::mark_sampled(const Vector& y, const Vector& mu) {
  if (!sampled(y, mu)) sampled_.emplace_back(y, mu);
}

}  // namespace sgrom
