#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

namespace sgrom {

/// Refinement levels (1-based) of a tensor rule, one entry per stochastic
/// dimension.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> levels);

  static MultiIndex unit(std::size_t dim);

  std::size_t dim() const { return levels_.size(); }
  int operator[](std::size_t k) const { return levels_[k]; }
  const std::vector<int>& levels() const { return levels_; }
  int max_level() const;

  MultiIndex forward(std::size_t k) const;
  MultiIndex backward(std::size_t k) const;

  std::string str() const;

  auto operator<=>(const MultiIndex&) const = default;

 private:
  std::vector<int> levels_;
};

/// Finite set of multi-indices of a common dimension. Ordered
/// lexicographically, which is also the tie-breaking order used by the
/// refinement drivers.
class MultiIndexSet {
 public:
  using const_iterator = std::set<MultiIndex>::const_iterator;

  explicit MultiIndexSet(std::size_t dim);
  MultiIndexSet(std::size_t dim, std::initializer_list<std::vector<int>> indices);

  static MultiIndexSet unit(std::size_t dim);
  /// {1..max_levels[0]} x ... x {1..max_levels[d-1]}
  static MultiIndexSet rectangular(const std::vector<int>& max_levels);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  bool contains(const MultiIndex& i) const { return indices_.count(i) != 0; }
  const_iterator begin() const { return indices_.begin(); }
  const_iterator end() const { return indices_.end(); }
  int max_level() const;

  /// Unchecked insertion. Use refine() to keep the set admissible.
  void insert(const MultiIndex& i);
  /// Adds a forward neighbor; throws std::invalid_argument otherwise.
  void refine(const MultiIndex& i);

  bool operator==(const MultiIndexSet&) const = default;

 private:
  std::size_t dim_;
  std::set<MultiIndex> indices_;
};

bool is_admissible(const MultiIndexSet& set);

/// Forward neighbors N(I): indices outside I whose insertion keeps I
/// admissible. Lexicographically sorted.
std::vector<MultiIndex> neighbors(const MultiIndexSet& set);

/// I united with N(I).
MultiIndexSet with_neighbors(const MultiIndexSet& set);

// Nodes are identified by integer positions on a fixed finest Clenshaw-Curtis
// level so that recycled nodes compare exactly across levels.
inline constexpr int kKeyLevel = 20;
inline constexpr int kDefaultMaxLevel = 10;
inline constexpr int kHardMaxLevel = 16;

using NodeKey = std::vector<int>;

/// Number of points of the level-`level` nested Clenshaw-Curtis rule.
std::size_t cc_points(int level);

/// Coordinate in [-1, 1] of the 1D node with the given finest-level key.
double node_coordinate(int key);

struct Rule1D {
  int level = 0;
  std::vector<double> nodes;    // ascending
  std::vector<double> weights;  // against the density 1/2 on [-1, 1]
  std::vector<int> keys;
};

/// Nested Clenshaw-Curtis rule; throws std::invalid_argument on level < 1.
const Rule1D& cc_rule(int level);

/// One-dimensional difference operator applied to h.
double difference_apply(int level, const std::function<double(double)>& h);

struct QuadraturePoint {
  NodeKey key;
  Eigen::VectorXd y;
  double weight = 0.0;
};

class LevelCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NodeEvaluationError : public std::runtime_error {
 public:
  NodeEvaluationError(const QuadraturePoint& point, const std::string& what);
  const NodeKey& key() const { return key_; }
  const Eigen::VectorXd& y() const { return y_; }

 private:
  NodeKey key_;
  Eigen::VectorXd y_;
};

/// Node -> signed weight map, kept sorted by node key.
class SparseQuadrature {
 public:
  SparseQuadrature() = default;
  SparseQuadrature(std::size_t dim, const std::map<NodeKey, double>& weights);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  const std::vector<QuadraturePoint>& points() const { return points_; }
  double weight_sum() const;
  double abs_weight_sum() const;
  /// Weight of the node with the given key, 0 if absent.
  double weight(const NodeKey& key) const;
  bool contains(const NodeKey& key) const;

 private:
  std::size_t dim_ = 0;
  std::vector<QuadraturePoint> points_;
};

/// Combination-technique assembly of the sparse rule E_I. Throws
/// LevelCapExceeded if an index exceeds `max_level`.
SparseQuadrature assemble(const MultiIndexSet& set, int max_level = kDefaultMaxLevel);

/// Full tensor product of 1D rules of the given levels.
SparseQuadrature tensor_rule(const MultiIndex& levels);

/// Signed node weights of the tensor difference operator Delta^i.
SparseQuadrature difference_rule(const MultiIndex& index);

/// Sum of w_j h(y_j) in canonical node order. `h` receives the
/// QuadraturePoint and may return a double or an Eigen vector. Failures of
/// h are rethrown as NodeEvaluationError carrying the node.
template <class Fn>
auto integrate(const SparseQuadrature& quad, Fn&& h) {
  using Value = std::decay_t<decltype(h(std::declval<const QuadraturePoint&>()))>;
  if (quad.size() == 0) throw std::invalid_argument("integrate: empty quadrature");
  Value acc{};
  bool first = true;
  for (const auto& p : quad.points()) {
    Value v;
    try {
      v = h(p);
    } catch (const NodeEvaluationError&) {
      throw;
    } catch (const std::exception& e) {
      throw NodeEvaluationError(p, e.what());
    }
    if (first) {
      acc = p.weight * v;
      first = false;
    } else {
      acc += p.weight * v;
    }
  }
  return acc;
}

/// |Delta^i[h]| for every i in N(I).
std::map<MultiIndex, double> truncation_terms(
    const MultiIndexSet& set, const std::function<double(const QuadraturePoint&)>& h);

/// Lexicographically smallest argmax of a truncation-term map.
MultiIndex argmax_term(const std::map<MultiIndex, double>& terms);

// Line-oriented text format: one multi-index per line, levels separated by
// spaces. A leading "# dim N" line records the dimension.
void write_index_set(std::ostream& os, const MultiIndexSet& set);
MultiIndexSet read_index_set(std::istream& is);
/// One node per line: coordinates followed by the weight.
void write_nodes(std::ostream& os, const SparseQuadrature& quad);

}  // namespace sgrom
