#include "sgrom/sparse_grid.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>

namespace sgrom {

MultiIndex::MultiIndex(std::vector<int> levels) : levels_(std::move(levels)) {
  for (int l : levels_)
    if (l < 1) throw std::invalid_argument("MultiIndex: levels must be >= 1");
}

MultiIndex MultiIndex::unit(std::size_t dim) { return MultiIndex(std::vector<int>(dim, 1)); }

int MultiIndex::max_level() const {
  return levels_.empty() ? 0 : *std::max_element(levels_.begin(), levels_.end());
}

MultiIndex MultiIndex::forward(std::size_t k) const {
  auto l = levels_;
  ++l.at(k);
  return MultiIndex(std::move(l));
}

MultiIndex MultiIndex::backward(std::size_t k) const {
  auto l = levels_;
  --l.at(k);
  return MultiIndex(std::move(l));
}

std::string MultiIndex::str() const {
  std::string s = "(";
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    if (k) s += ",";
    s += std::to_string(levels_[k]);
  }
  return s + ")";
}

MultiIndexSet::MultiIndexSet(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("MultiIndexSet: dimension must be >= 1");
}

MultiIndexSet::MultiIndexSet(std::size_t dim, std::initializer_list<std::vector<int>> indices)
    : MultiIndexSet(dim) {
  for (const auto& l : indices) insert(MultiIndex(l));
}

MultiIndexSet MultiIndexSet::unit(std::size_t dim) {
  MultiIndexSet s(dim);
  s.insert(MultiIndex::unit(dim));
  return s;
}

MultiIndexSet MultiIndexSet::rectangular(const std::vector<int>& max_levels) {
  MultiIndexSet s(max_levels.size());
  std::vector<int> cur(max_levels.size(), 1);
  while (true) {
    s.insert(MultiIndex(cur));
    std::size_t k = 0;
    while (k < cur.size() && cur[k] == max_levels[k]) cur[k++] = 1;
    if (k == cur.size()) break;
    ++cur[k];
  }
  return s;
}

int MultiIndexSet::max_level() const {
  int m = 0;
  for (const auto& i : indices_) m = std::max(m, i.max_level());
  return m;
}

void MultiIndexSet::insert(const MultiIndex& i) {
  if (i.dim() != dim_) throw std::invalid_argument("MultiIndexSet: dimension mismatch");
  indices_.insert(i);
}

void MultiIndexSet::refine(const MultiIndex& i) {
  if (i.dim() != dim_) throw std::invalid_argument("MultiIndexSet: dimension mismatch");
  if (contains(i)) throw std::invalid_argument("refine: " + i.str() + " already a member");
  for (std::size_t k = 0; k < dim_; ++k)
    if (i[k] > 1 && !contains(i.backward(k)))
      throw std::invalid_argument("refine: " + i.str() + " is not a forward neighbor");
  indices_.insert(i);
}

bool is_admissible(const MultiIndexSet& set) {
  for (const auto& i : set)
    for (std::size_t k = 0; k < set.dim(); ++k)
      if (i[k] > 1 && !set.contains(i.backward(k))) return false;
  return true;
}

std::vector<MultiIndex> neighbors(const MultiIndexSet& set) {
  if (set.empty()) throw std::invalid_argument("neighbors: empty index set");
  std::set<MultiIndex> out;
  for (const auto& i : set) {
    for (std::size_t j = 0; j < set.dim(); ++j) {
      MultiIndex cand = i.forward(j);
      if (set.contains(cand)) continue;
      bool ok = true;
      for (std::size_t k = 0; k < set.dim() && ok; ++k)
        if (cand[k] > 1 && !set.contains(cand.backward(k))) ok = false;
      if (ok) out.insert(cand);
    }
  }
  return {out.begin(), out.end()};
}

MultiIndexSet with_neighbors(const MultiIndexSet& set) {
  MultiIndexSet out = set;
  for (const auto& n : neighbors(set)) out.insert(n);
  return out;
}

std::size_t cc_points(int level) {
  if (level < 1) throw std::invalid_argument("cc_points: level must be >= 1");
  return level == 1 ? 1 : (std::size_t{1} << (level - 1)) + 1;
}

double node_coordinate(int key) {
  // -cos(pi k / N) written as a sine so the centre is exactly 0 and the rule
  // is exactly antisymmetric.
  constexpr long long n = 1LL << (kKeyLevel - 1);
  return std::sin(std::numbers::pi * static_cast<double>(2 * key - n) / static_cast<double>(2 * n));
}

namespace {

Rule1D build_cc_rule(int level) {
  Rule1D r;
  r.level = level;
  const std::size_t m = cc_points(level);
  if (m == 1) {
    r.nodes = {0.0};
    r.weights = {1.0};
    r.keys = {1 << (kKeyLevel - 2)};
    return r;
  }
  const int n = static_cast<int>(m - 1);
  const int stride = 1 << (kKeyLevel - level);
  r.nodes.resize(m);
  r.weights.resize(m);
  r.keys.resize(m);
  for (int j = 0; j <= n; ++j) {
    const double theta = std::numbers::pi * j / n;
    double s = 0.0;
    for (int k = 1; k <= n / 2; ++k) {
      const double b = (2 * k == n) ? 1.0 : 2.0;
      s += b / (4.0 * k * k - 1.0) * std::cos(2.0 * k * theta);
    }
    const double c = (j == 0 || j == n) ? 1.0 : 2.0;
    r.keys[j] = j * stride;
    r.nodes[j] = node_coordinate(r.keys[j]);
    r.weights[j] = 0.5 * c / n * (1.0 - s);
  }
  return r;
}

}  // namespace

const Rule1D& cc_rule(int level) {
  if (level < 1) throw std::invalid_argument("cc_rule: level must be >= 1");
  if (level > kHardMaxLevel)
    throw LevelCapExceeded("cc_rule: level " + std::to_string(level) + " exceeds hard cap");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<Rule1D>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[level];
  if (!slot) slot = std::make_unique<Rule1D>(build_cc_rule(level));
  return *slot;
}

double difference_apply(int level, const std::function<double(double)>& h) {
  auto apply = [&](int l) {
    const auto& r = cc_rule(l);
    double s = 0.0;
    for (std::size_t j = 0; j < r.nodes.size(); ++j) s += r.weights[j] * h(r.nodes[j]);
    return s;
  };
  return level == 1 ? apply(1) : apply(level) - apply(level - 1);
}

NodeEvaluationError::NodeEvaluationError(const QuadraturePoint& point, const std::string& what)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "evaluation failed at node y = (";
        for (Eigen::Index k = 0; k < point.y.size(); ++k) os << (k ? ", " : "") << point.y[k];
        os << "): " << what;
        return os.str();
      }()),
      key_(point.key),
      y_(point.y) {}

SparseQuadrature::SparseQuadrature(std::size_t dim, const std::map<NodeKey, double>& weights)
    : dim_(dim) {
  points_.reserve(weights.size());
  for (const auto& [key, w] : weights) {
    QuadraturePoint p;
    p.key = key;
    p.y.resize(static_cast<Eigen::Index>(key.size()));
    for (std::size_t k = 0; k < key.size(); ++k) p.y[static_cast<Eigen::Index>(k)] = node_coordinate(key[k]);
    p.weight = w;
    points_.push_back(std::move(p));
  }
}

double SparseQuadrature::weight_sum() const {
  double s = 0.0;
  for (const auto& p : points_) s += p.weight;
  return s;
}

double SparseQuadrature::abs_weight_sum() const {
  double s = 0.0;
  for (const auto& p : points_) s += std::abs(p.weight);
  return s;
}

namespace {

auto find_point(const std::vector<QuadraturePoint>& pts, const NodeKey& key) {
  return std::lower_bound(pts.begin(), pts.end(), key,
                          [](const QuadraturePoint& p, const NodeKey& k) { return p.key < k; });
}

// Adds coef * (tensor rule of `levels`) into `acc`.
void accumulate_tensor(const std::vector<int>& levels, double coef, std::map<NodeKey, double>& acc) {
  const std::size_t d = levels.size();
  std::vector<const Rule1D*> rules(d);
  for (std::size_t k = 0; k < d; ++k) rules[k] = &cc_rule(levels[k]);
  std::vector<std::size_t> pos(d, 0);
  NodeKey key(d);
  while (true) {
    double w = coef;
    for (std::size_t k = 0; k < d; ++k) {
      key[k] = rules[k]->keys[pos[k]];
      w *= rules[k]->weights[pos[k]];
    }
    acc[key] += w;
    std::size_t k = 0;
    while (k < d && pos[k] + 1 == rules[k]->nodes.size()) pos[k++] = 0;
    if (k == d) break;
    ++pos[k];
  }
}

}  // namespace

double SparseQuadrature::weight(const NodeKey& key) const {
  auto it = find_point(points_, key);
  return (it != points_.end() && it->key == key) ? it->weight : 0.0;
}

bool SparseQuadrature::contains(const NodeKey& key) const {
  auto it = find_point(points_, key);
  return it != points_.end() && it->key == key;
}

SparseQuadrature tensor_rule(const MultiIndex& levels) {
  std::map<NodeKey, double> acc;
  accumulate_tensor(levels.levels(), 1.0, acc);
  return SparseQuadrature(levels.dim(), acc);
}

SparseQuadrature difference_rule(const MultiIndex& index) {
  const std::size_t d = index.dim();
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < d; ++k)
    if (index[k] > 1) active.push_back(k);
  std::map<NodeKey, double> acc;
  for (unsigned mask = 0; mask < (1u << active.size()); ++mask) {
    auto levels = index.levels();
    int parity = 0;
    for (std::size_t b = 0; b < active.size(); ++b)
      if (mask & (1u << b)) {
        --levels[active[b]];
        ++parity;
      }
    accumulate_tensor(levels, parity % 2 ? -1.0 : 1.0, acc);
  }
  return SparseQuadrature(d, acc);
}

SparseQuadrature assemble(const MultiIndexSet& set, int max_level) {
  if (set.empty()) throw std::invalid_argument("assemble: empty index set");
  if (set.max_level() > max_level)
    throw LevelCapExceeded("assemble: level " + std::to_string(set.max_level()) +
                           " exceeds the cap " + std::to_string(max_level));
  const std::size_t d = set.dim();
  std::map<NodeKey, double> acc;
  // Combination coefficient of each member: sum over z in {0,1}^d with
  // i + z in I of (-1)^|z|. Members with zero coefficient still contribute
  // their nodes (with zero weight) so the node set is the union of grids.
  for (const auto& i : set) {
    double coef = 0.0;
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      auto levels = i.levels();
      int parity = 0;
      for (std::size_t k = 0; k < d; ++k)
        if (mask & (1u << k)) {
          ++levels[k];
          ++parity;
        }
      if (set.contains(MultiIndex(levels))) coef += parity % 2 ? -1.0 : 1.0;
    }
    accumulate_tensor(i.levels(), coef, acc);
  }
  return SparseQuadrature(d, acc);
}

std::map<MultiIndex, double> truncation_terms(
    const MultiIndexSet& set, const std::function<double(const QuadraturePoint&)>& h) {
  std::map<MultiIndex, double> out;
  for (const auto& i : neighbors(set)) out[i] = std::abs(integrate(difference_rule(i), h));
  return out;
}

MultiIndex argmax_term(const std::map<MultiIndex, double>& terms) {
  if (terms.empty()) throw std::invalid_argument("argmax_term: no candidates");
  auto best = terms.begin();
  for (auto it = terms.begin(); it != terms.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

void write_index_set(std::ostream& os, const MultiIndexSet& set) {
  os << "# dim " << set.dim() << '\n';
  for (const auto& i : set) {
    for (std::size_t k = 0; k < i.dim(); ++k) os << (k ? " " : "") << i[k];
    os << '\n';
  }
}

MultiIndexSet read_index_set(std::istream& is) {
  std::string line;
  std::size_t dim = 0;
  std::vector<std::vector<int>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, tag;
      ls >> hash >> tag;
      if (tag == "dim") ls >> dim;
      continue;
    }
    std::vector<int> levels;
    int l;
    while (ls >> l) levels.push_back(l);
    if (!ls.eof()) throw std::invalid_argument("read_index_set: malformed line '" + line + "'");
    rows.push_back(std::move(levels));
  }
  if (dim == 0) {
    if (rows.empty()) throw std::invalid_argument("read_index_set: no dimension information");
    dim = rows.front().size();
  }
  MultiIndexSet set(dim);
  for (auto& r : rows) set.insert(MultiIndex(std::move(r)));
  return set;
}

void write_nodes(std::ostream& os, const SparseQuadrature& quad) {
  const auto old = os.precision(17);
  for (const auto& p : quad.points()) {
    for (Eigen::Index k = 0; k < p.y.size(); ++k) os << p.y[k] << ' ';
    os << p.weight << '\n';
  }
  os.precision(old);
}

}  // namespace sgrom
