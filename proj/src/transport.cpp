#include "taumix/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace taumix::transport {

PointSet::PointSet(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0 && !coords_.empty())
    throw std::invalid_argument("PointSet: dimension must be at least 1");
  if (dim_ != 0 && coords_.size() % dim_ != 0)
    throw std::invalid_argument("PointSet: coordinate count is not a multiple of the dimension");
}

PointSet PointSet::from_rows(const std::vector<std::vector<double>>& rows) {
  PointSet out;
  for (const auto& r : rows) out.push_back(r);
  return out;
}

PointSet PointSet::from_scalars(std::span<const double> xs) {
  return PointSet(1, std::vector<double>(xs.begin(), xs.end()));
}

void PointSet::push_back(std::span<const double> point) {
  if (point.empty()) throw std::invalid_argument("PointSet: empty point");
  if (dim_ == 0) {
    dim_ = point.size();
  } else if (point.size() != dim_) {
    throw std::invalid_argument("PointSet: dimension mismatch (" + std::to_string(point.size()) +
                                " vs " + std::to_string(dim_) + ")");
  }
  coords_.insert(coords_.end(), point.begin(), point.end());
}

DiscreteMeasure DiscreteMeasure::uniform(PointSet support) {
  const std::size_t n = support.size();
  if (n == 0) throw std::invalid_argument("DiscreteMeasure: empty support");
  return {std::move(support), std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

void DiscreteMeasure::validate() const {
  if (support.empty()) throw std::invalid_argument("DiscreteMeasure: empty support");
  if (weights.size() != support.size())
    throw std::invalid_argument("DiscreteMeasure: weight count does not match support size");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("DiscreteMeasure: weights must be finite and nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("DiscreteMeasure: weights must sum to 1");
  for (double c : support.coords())
    if (!std::isfinite(c)) throw std::invalid_argument("DiscreteMeasure: non-finite coordinate");
}

double euclidean(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<double> principal_axis_keys(const PointSet& points) {
  const std::size_t n = points.size();
  const std::size_t d = points.dim();
  std::vector<double> keys(n, 0.0);
  if (n == 0) return keys;
  if (d == 1) {
    for (std::size_t i = 0; i < n; ++i) keys[i] = points[i][0];
    return keys;
  }

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) mean[k] += points[i][k];
  for (double& m : mean) m /= static_cast<double>(n);

  // Power iteration on the scatter matrix, applied implicitly.
  std::vector<double> axis(d), next(d);
  for (std::size_t k = 0; k < d; ++k) axis[k] = 1.0 / std::sqrt(static_cast<double>(d + k));
  for (int iter = 0; iter < 30; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double proj = 0.0;
      for (std::size_t k = 0; k < d; ++k) proj += (points[i][k] - mean[k]) * axis[k];
      for (std::size_t k = 0; k < d; ++k) next[k] += proj * (points[i][k] - mean[k]);
    }
    double norm = 0.0;
    for (double v : next) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;
    for (std::size_t k = 0; k < d; ++k) axis[k] = next[k] / norm;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double proj = 0.0;
    for (std::size_t k = 0; k < d; ++k) proj += points[i][k] * axis[k];
    keys[i] = proj;
  }
  return keys;
}

// ---------------------------------------------------------------------------
// Network simplex
// ---------------------------------------------------------------------------
//
// Nodes 0..n1-1 are supplies, n1..n1+n2-1 demands, and n1+n2 is the root.
// Real arc e = i * n2 + j runs from supply i to demand n1 + j. Arc
// arc_num + u is the artificial arc u -> root; only the one attached to the
// first supply node in the north-west order is ever basic. Arcs are
// uncapacitated, so every non-basic arc carries zero flow and only the flow
// on each node's tree arc (pred_flow_) needs to be stored.

namespace {
constexpr signed char kStateTree = 0;
constexpr signed char kStateLower = 1;
constexpr signed char kDirUp = 1;
constexpr signed char kDirDown = -1;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

void TransportSolver::init(std::span<const double> supply, std::span<const double> demand,
                           std::span<const double> cost, std::span<const int> row_order,
                           std::span<const int> col_order) {
  n1_ = static_cast<int>(supply.size());
  n2_ = static_cast<int>(demand.size());
  node_num_ = n1_ + n2_;
  arc_num_ = n1_ * n2_;
  root_ = node_num_;
  cost_ = cost;
  const int all_node_num = node_num_ + 1;

  state_.assign(static_cast<std::size_t>(arc_num_) + node_num_, kStateLower);
  pi_.resize(all_node_num);
  parent_.resize(all_node_num);
  pred_.resize(all_node_num);
  pred_flow_.resize(all_node_num);
  thread_.resize(all_node_num);
  rev_thread_.resize(all_node_num);
  succ_num_.resize(all_node_num);
  last_succ_.resize(all_node_num);
  pred_dir_.resize(all_node_num);
  first_child_.assign(all_node_num, -1);
  next_sibling_.resize(all_node_num);

  double max_cost = 0.0;
  for (double c : cost) max_cost = std::max(max_cost, c);
  eps_ = 1e-12 * std::max(1.0, max_cost);

  auto add_child = [&](int p, int c) {
    next_sibling_[c] = first_child_[p];
    first_child_[p] = c;
  };
  auto row_at = [&](int k) { return row_order.empty() ? k : row_order[k]; };
  auto col_at = [&](int k) { return col_order.empty() ? k : col_order[k]; };

  // Initial basis: north-west corner rule in the requested row/column order.
  // Every step brings exactly one new node into the tree. A simultaneous
  // row/column exhaustion is resolved by moving down a row first, so each
  // zero-flow arc points from its child (a supply node) towards the root and
  // the starting tree is strongly feasible.
  const int first_row = row_at(0);
  parent_[root_] = -1;
  pred_[root_] = -1;
  pred_flow_[root_] = 0.0;
  parent_[first_row] = root_;
  pred_[first_row] = arc_num_ + first_row;
  pred_dir_[first_row] = kDirUp;
  pred_flow_[first_row] = 0.0;
  state_[arc_num_ + first_row] = kStateTree;
  add_child(root_, first_row);

  int ri = 0, ci = 0;
  double rem_s = supply[first_row];
  double rem_d = demand[col_at(0)];
  bool new_col = true;
  for (;;) {
    const int i = row_at(ri);
    const int j = col_at(ci);
    const int e = i * n2_ + j;
    double f = std::min(rem_s, rem_d);
    if (ri == n1_ - 1) f = rem_d;
    if (ci == n2_ - 1) f = rem_s;
    state_[e] = kStateTree;
    const int child = new_col ? n1_ + j : i;
    parent_[child] = new_col ? i : n1_ + j;
    pred_[child] = e;
    pred_dir_[child] = new_col ? kDirDown : kDirUp;
    pred_flow_[child] = f;
    add_child(parent_[child], child);
    if (ri == n1_ - 1 && ci == n2_ - 1) break;
    const bool row_done = ci == n2_ - 1 || (ri != n1_ - 1 && rem_s <= rem_d);
    rem_s -= f;
    rem_d -= f;
    if (row_done) {
      ++ri;
      rem_s = supply[row_at(ri)];
      new_col = false;
    } else {
      ++ci;
      rem_d = demand[col_at(ci)];
      new_col = true;
    }
  }

  // Preorder thread and potentials.
  pi_[root_] = 0.0;
  stack_.clear();
  stack_.push_back(root_);
  int prev = -1;
  while (!stack_.empty()) {
    const int u = stack_.back();
    stack_.pop_back();
    if (prev >= 0) {
      thread_[prev] = u;
      rev_thread_[u] = prev;
    }
    prev = u;
    if (u != root_) {
      const double c = arc_cost(pred_[u]);
      pi_[u] = pred_dir_[u] == kDirUp ? pi_[parent_[u]] - c : pi_[parent_[u]] + c;
    }
    for (int c = first_child_[u]; c != -1; c = next_sibling_[c]) stack_.push_back(c);
  }
  thread_[prev] = root_;
  rev_thread_[root_] = prev;

  // Subtree sizes and last successors, walking the thread backwards.
  for (int u = 0; u < all_node_num; ++u) {
    succ_num_[u] = 1;
    last_succ_[u] = u;
  }
  for (int u = rev_thread_[root_]; u != root_; u = rev_thread_[u]) {
    const int p = parent_[u];
    succ_num_[p] += succ_num_[u];
    if (last_succ_[p] == p) last_succ_[p] = last_succ_[u];
  }

  const int block = std::max(10, static_cast<int>(std::sqrt(static_cast<double>(arc_num_))));
  block_rows_ = std::max(1, (block + n2_ - 1) / n2_);
  next_row_ = 0;
  pivots_ = 0;
}

bool TransportSolver::find_entering_arc() {
  // Block search in units of whole rows of the cost matrix.
  const double* pi_col = pi_.data() + n1_;
  double min = -eps_;
  bool found = false;
  int rows_in_block = 0;
  int i = next_row_;
  for (int visited = 0; visited < n1_; ++visited) {
    const double* row = cost_.data() + static_cast<std::size_t>(i) * n2_;
    const double shift = pi_[i];
    for (int j = 0; j < n2_; ++j) {
      const double c = row[j] + shift - pi_col[j];
      if (c < min) {
        const int e = i * n2_ + j;
        if (state_[e] != kStateTree) {
          min = c;
          in_arc_ = e;
          found = true;
        }
      }
    }
    if (++i == n1_) i = 0;
    if (++rows_in_block == block_rows_) {
      if (found) {
        next_row_ = i;
        return true;
      }
      rows_in_block = 0;
    }
  }
  next_row_ = i;
  return found;
}

void TransportSolver::find_join_node() {
  int u = arc_source(in_arc_);
  int v = arc_target(in_arc_);
  while (u != v) {
    if (succ_num_[u] < succ_num_[v]) {
      u = parent_[u];
    } else {
      v = parent_[v];
    }
  }
  join_ = u;
}

bool TransportSolver::find_leaving_arc() {
  // Arcs are uncapacitated, so the entering arc is always at its lower bound
  // and only tree arcs traversed against their direction can block.
  const int first = arc_source(in_arc_);
  const int second = arc_target(in_arc_);
  delta_ = kInf;
  int result = 0;

  for (int u = first; u != join_; u = parent_[u]) {
    const double d = pred_dir_[u] == kDirDown ? kInf : pred_flow_[u];
    if (d < delta_) {
      delta_ = d;
      u_out_ = u;
      result = 1;
    }
  }
  for (int u = second; u != join_; u = parent_[u]) {
    const double d = pred_dir_[u] == kDirUp ? kInf : pred_flow_[u];
    if (d <= delta_) {
      delta_ = d;
      u_out_ = u;
      result = 2;
    }
  }

  if (result == 1) {
    u_in_ = first;
    v_in_ = second;
  } else {
    u_in_ = second;
    v_in_ = first;
  }
  return result != 0;
}

void TransportSolver::change_flow() {
  if (delta_ > 0) {
    for (int u = arc_source(in_arc_); u != join_; u = parent_[u]) {
      pred_flow_[u] -= pred_dir_[u] * delta_;
    }
    for (int u = arc_target(in_arc_); u != join_; u = parent_[u]) {
      pred_flow_[u] += pred_dir_[u] * delta_;
    }
  }
  state_[in_arc_] = kStateTree;
  state_[pred_[u_out_]] = kStateLower;
  pred_flow_[u_out_] = 0.0;
}

void TransportSolver::update_tree_structure() {
  const int old_rev_thread = rev_thread_[u_out_];
  const int old_succ_num = succ_num_[u_out_];
  const int old_last_succ = last_succ_[u_out_];
  v_out_ = parent_[u_out_];

  if (u_in_ == u_out_) {
    parent_[u_in_] = v_in_;
    pred_[u_in_] = in_arc_;
    pred_dir_[u_in_] = u_in_ == arc_source(in_arc_) ? kDirUp : kDirDown;
    pred_flow_[u_in_] = delta_;

    if (thread_[v_in_] != u_out_) {
      int after = thread_[old_last_succ];
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
      after = thread_[v_in_];
      thread_[v_in_] = u_out_;
      rev_thread_[u_out_] = v_in_;
      thread_[old_last_succ] = after;
      rev_thread_[after] = old_last_succ;
    }
  } else {
    // When old_rev_thread == v_in, join and v_out coincide.
    const int thread_continue =
        old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];

    // Re-hang the stem (path u_in .. u_out) below v_in.
    int stem = u_in_;
    int par_stem = v_in_;
    int next_stem;
    int last = last_succ_[u_in_];
    int before;
    int after = thread_[last];
    thread_[v_in_] = u_in_;
    dirty_revs_.clear();
    dirty_revs_.push_back(v_in_);
    while (stem != u_out_) {
      next_stem = parent_[stem];
      thread_[last] = next_stem;
      dirty_revs_.push_back(last);

      before = rev_thread_[stem];
      thread_[before] = after;
      rev_thread_[after] = before;

      parent_[stem] = par_stem;
      par_stem = stem;
      stem = next_stem;

      last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
      after = thread_[last];
    }
    parent_[u_out_] = par_stem;
    thread_[last] = thread_continue;
    rev_thread_[thread_continue] = last;
    last_succ_[u_out_] = last;

    if (old_rev_thread != v_in_) {
      thread_[old_rev_thread] = after;
      rev_thread_[after] = old_rev_thread;
    }

    for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

    // Shift tree arcs one step down the reversed stem.
    int tmp_sc = 0;
    const int tmp_ls = last_succ_[u_out_];
    for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
      pred_[u] = pred_[p];
      pred_dir_[u] = static_cast<signed char>(-pred_dir_[p]);
      pred_flow_[u] = pred_flow_[p];
      tmp_sc += succ_num_[u] - succ_num_[p];
      succ_num_[u] = tmp_sc;
      last_succ_[p] = tmp_ls;
    }
    pred_[u_in_] = in_arc_;
    pred_dir_[u_in_] = u_in_ == arc_source(in_arc_) ? kDirUp : kDirDown;
    pred_flow_[u_in_] = delta_;
    succ_num_[u_in_] = old_succ_num;
  }

  const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
  const int last_succ_out = last_succ_[u_out_];
  for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) {
    last_succ_[u] = last_succ_out;
  }

  if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
    for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
      last_succ_[u] = old_rev_thread;
    }
  } else if (last_succ_out != old_last_succ) {
    for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) {
      last_succ_[u] = last_succ_out;
    }
  }

  for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
  for (int u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
}

void TransportSolver::update_potential() {
  const double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * arc_cost(in_arc_);
  const int end = thread_[last_succ_[u_in_]];
  for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
}

double TransportSolver::solve(std::span<const double> supply, std::span<const double> demand,
                              std::span<const double> cost, std::span<const int> row_order,
                              std::span<const int> col_order) {
  if (supply.empty() || demand.empty())
    throw std::invalid_argument("TransportSolver: empty marginal");
  if (cost.size() != supply.size() * demand.size())
    throw std::invalid_argument("TransportSolver: cost matrix has wrong size");
  if (!row_order.empty() && row_order.size() != supply.size())
    throw std::invalid_argument("TransportSolver: row order has wrong size");
  if (!col_order.empty() && col_order.size() != demand.size())
    throw std::invalid_argument("TransportSolver: column order has wrong size");
  double s_total = 0.0, d_total = 0.0;
  for (double s : supply) {
    if (!(s > 0.0)) throw std::invalid_argument("TransportSolver: supplies must be positive");
    s_total += s;
  }
  for (double d : demand) {
    if (!(d > 0.0)) throw std::invalid_argument("TransportSolver: demands must be positive");
    d_total += d;
  }
  if (std::abs(s_total - d_total) > 1e-9 * std::max(s_total, d_total))
    throw std::invalid_argument("TransportSolver: unbalanced marginals");
  for (double c : cost)
    if (!std::isfinite(c)) throw std::invalid_argument("TransportSolver: non-finite cost");

  init(supply, demand, cost, row_order, col_order);
  const std::uint64_t pivot_cap = 1000ULL * static_cast<std::uint64_t>(arc_num_ + node_num_);
  while (find_entering_arc()) {
    if (pivots_ > pivot_cap) throw std::logic_error("TransportSolver: pivot limit exceeded");
    find_join_node();
    if (!find_leaving_arc()) throw std::logic_error("TransportSolver: unbounded pivot");
    change_flow();
    update_tree_structure();
    update_potential();
    ++pivots_;
  }

  double total = 0.0;
  for (int u = 0; u < node_num_; ++u) {
    if (pred_flow_[u] > 0.0) total += pred_flow_[u] * arc_cost(pred_[u]);
  }
  cost_ = {};
  return total;
}

// ---------------------------------------------------------------------------
// W1 front ends
// ---------------------------------------------------------------------------

namespace {

// Distinct points with the summed mass of their duplicates.
struct Grouped {
  PointSet points;
  std::vector<double> mass;
};

Grouped merge_duplicates(const PointSet& pts, std::span<const double> mass) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto less = [&](std::size_t i, std::size_t j) {
    auto a = pts[i];
    auto b = pts[j];
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  };
  std::stable_sort(order.begin(), order.end(), less);

  Grouped g;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t idx = order[k];
    if (k > 0 && std::ranges::equal(pts[idx], pts[order[k - 1]])) {
      g.mass.back() += mass[idx];
    } else {
      g.points.push_back(pts[idx]);
      g.mass.push_back(mass[idx]);
    }
  }
  return g;
}

std::vector<double> cost_matrix(const PointSet& a, const PointSet& b);

std::vector<int> order_by(std::span<const double> keys) {
  std::vector<int> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return keys[i] < keys[j]; });
  return order;
}

double solve_grouped(const Grouped& ga, std::span<const double> demand, const Grouped& gb) {
  PointSet both = ga.points;
  for (std::size_t j = 0; j < gb.points.size(); ++j) both.push_back(gb.points[j]);
  const std::vector<double> keys = principal_axis_keys(both);
  const std::span<const double> all(keys);
  const auto row_order = order_by(all.first(ga.points.size()));
  const auto col_order = order_by(all.subspan(ga.points.size()));
  TransportSolver solver;
  return solver.solve(ga.mass, demand, cost_matrix(ga.points, gb.points), row_order, col_order);
}

std::vector<double> cost_matrix(const PointSet& a, const PointSet& b) {
  std::vector<double> c(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i * b.size() + j] = euclidean(a[i], b[j]);
  return c;
}

DiscreteMeasure drop_tiny(const DiscreteMeasure& m) {
  DiscreteMeasure out;
  double total = 0.0;
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    if (m.weights[i] >= 1e-15) {
      out.support.push_back(m.support[i]);
      out.weights.push_back(m.weights[i]);
      total += m.weights[i];
    }
  }
  if (out.weights.empty()) throw std::invalid_argument("DiscreteMeasure: all weights negligible");
  for (double& w : out.weights) w /= total;
  return out;
}

}  // namespace

double w1_discrete(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  a.validate();
  b.validate();
  if (a.support.dim() != b.support.dim())
    throw std::invalid_argument("w1_discrete: dimension mismatch");

  const DiscreteMeasure ca = drop_tiny(a);
  const DiscreteMeasure cb = drop_tiny(b);
  const Grouped ga = merge_duplicates(ca.support, ca.weights);
  const Grouped gb = merge_duplicates(cb.support, cb.weights);

  // Rebalance the last demand so the marginals agree to the last bit.
  std::vector<double> demand = gb.mass;
  const double sa = std::accumulate(ga.mass.begin(), ga.mass.end(), 0.0);
  const double sb = std::accumulate(demand.begin(), demand.end(), 0.0);
  demand.back() = std::max(0.0, demand.back() + (sa - sb));

  return solve_grouped(ga, demand, gb);
}

double w1_uniform(const PointSet& a, const PointSet& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("w1_uniform: empty point set");
  if (a.dim() != b.dim()) throw std::invalid_argument("w1_uniform: dimension mismatch");
  for (double c : a.coords())
    if (!std::isfinite(c)) throw std::invalid_argument("w1_uniform: non-finite coordinate");
  for (double c : b.coords())
    if (!std::isfinite(c)) throw std::invalid_argument("w1_uniform: non-finite coordinate");

  // Integer masses: each point of `a` carries |b| units and each point of
  // `b` carries |a| units, so both totals equal |a||b| exactly.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const Grouped ga = merge_duplicates(a, std::vector<double>(a.size(), nb));
  const Grouped gb = merge_duplicates(b, std::vector<double>(b.size(), na));

  return solve_grouped(ga, gb.mass, gb) / (na * nb);
}

double w1_sorted_1d(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw std::invalid_argument("w1_sorted_1d: empty input");
  std::vector<double> x(xs.begin(), xs.end());
  std::vector<double> y(ys.begin(), ys.end());
  std::ranges::sort(x);
  std::ranges::sort(y);

  // Quantile breakpoints i/|x| and j/|y| on the common grid 1/(|x||y|).
  const std::uint64_t nx = x.size();
  const std::uint64_t ny = y.size();
  std::uint64_t i = 0, j = 0, pos = 0;
  double total = 0.0;
  while (i < nx && j < ny) {
    const std::uint64_t next_x = (i + 1) * ny;
    const std::uint64_t next_y = (j + 1) * nx;
    const std::uint64_t next = std::min(next_x, next_y);
    total += std::abs(x[i] - y[j]) * static_cast<double>(next - pos);
    pos = next;
    if (next_x == next) ++i;
    if (next_y == next) ++j;
  }
  return total / static_cast<double>(nx * ny);
}

}  // namespace taumix::transport
