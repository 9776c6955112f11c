#pragma once

// Exact 1-Wasserstein distance between finite discrete measures in R^d with
// Euclidean ground cost.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace taumix::transport {

/// Row-major storage of `size()` points in R^dim.
class PointSet {
 public:
  PointSet() = default;
  PointSet(std::size_t dim, std::vector<double> coords);

  static PointSet from_rows(const std::vector<std::vector<double>>& rows);
  static PointSet from_scalars(std::span<const double> xs);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const { return size() == 0; }

  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  void push_back(std::span<const double> point);
  const std::vector<double>& coords() const { return coords_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

/// Finite weighted point set. Weights are nonnegative and sum to one.
struct DiscreteMeasure {
  PointSet support;
  std::vector<double> weights;

  static DiscreteMeasure uniform(PointSet support);

  /// Throws std::invalid_argument when the measure is empty, the weights are
  /// negative or do not sum to one within 1e-12, or a coordinate is not finite.
  void validate() const;
};

double euclidean(std::span<const double> x, std::span<const double> y);

/// Projection of each point onto the leading principal axis of the set.
/// Sorting by these keys gives a good north-west-corner ordering for
/// TransportSolver when both marginals live in the same cloud.
std::vector<double> principal_axis_keys(const PointSet& points);

/// Exact solver for the balanced transportation problem
///
///   min sum_ij flow_ij * cost_ij  s.t.  sum_j flow_ij = supply_i,
///                                       sum_i flow_ij = demand_j,
///                                       flow >= 0
///
/// using the primal network simplex method on the complete bipartite graph
/// (spanning-tree bases with thread/depth indexing, block-search pivoting and
/// strongly feasible leaving-arc selection).
///
/// A solver instance keeps its work buffers between calls, so repeated
/// solves of similar size do not reallocate. Instances are not thread-safe;
/// use one per thread.
class TransportSolver {
 public:
  /// `cost` is row-major with supply.size() rows and demand.size() columns.
  /// Supplies and demands must be strictly positive with equal totals
  /// (relative tolerance 1e-9). Returns the optimal objective value.
  ///
  /// The starting basis comes from the north-west corner rule applied in
  /// `row_order` / `col_order` (identity when empty). Orders that sort both
  /// sides along a common axis give a near-optimal start.
  double solve(std::span<const double> supply, std::span<const double> demand,
               std::span<const double> cost, std::span<const int> row_order = {},
               std::span<const int> col_order = {});

  /// Pivot count of the most recent solve.
  std::uint64_t last_pivots() const { return pivots_; }

 private:
  void init(std::span<const double> supply, std::span<const double> demand,
            std::span<const double> cost, std::span<const int> row_order,
            std::span<const int> col_order);
  bool find_entering_arc();
  void find_join_node();
  bool find_leaving_arc();
  void change_flow();
  void update_tree_structure();
  void update_potential();

  int arc_source(int e) const { return e < arc_num_ ? e / n2_ : e - arc_num_; }
  int arc_target(int e) const { return e < arc_num_ ? n1_ + e % n2_ : root_; }
  double arc_cost(int e) const { return e < arc_num_ ? cost_[e] : 0.0; }

  int n1_ = 0;
  int n2_ = 0;
  int node_num_ = 0;
  int arc_num_ = 0;
  int root_ = 0;
  int block_rows_ = 1;
  int next_row_ = 0;
  double eps_ = 0.0;
  std::span<const double> cost_;

  std::vector<signed char> state_;
  std::vector<double> pi_, pred_flow_;
  std::vector<int> parent_, pred_, thread_, rev_thread_, succ_num_, last_succ_;
  std::vector<signed char> pred_dir_;
  std::vector<int> dirty_revs_, first_child_, next_sibling_, stack_;

  int in_arc_ = 0, join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0, v_out_ = 0;
  double delta_ = 0.0;
  std::uint64_t pivots_ = 0;
};

/// W1(a, b) with Euclidean ground metric, solved exactly as a transportation
/// LP. Weights below 1e-15 are dropped and the rest renormalized; coincident
/// support points are merged before solving.
double w1_discrete(const DiscreteMeasure& a, const DiscreteMeasure& b);

/// W1 between the uniform empirical measures on two point multisets.
double w1_uniform(const PointSet& a, const PointSet& b);

/// W1 between uniform empirical measures on the real line, computed as the
/// L1 distance between the two quantile functions. Independent of the LP
/// solver; intended as a cross-check in one dimension.
double w1_sorted_1d(std::span<const double> xs, std::span<const double> ys);

}  // namespace taumix::transport
