#include "taumix/tau_estimator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>
#include <utility>

namespace taumix {

void EstimatorConfig::validate() const {
  if (history < 1) throw std::invalid_argument("EstimatorConfig: history length m must be >= 1");
  if (neighbors < 1) throw std::invalid_argument("EstimatorConfig: neighbour count r must be >= 1");
  if (max_lag < 1) throw std::invalid_argument("EstimatorConfig: maximum lag K must be >= 1");
}

PairSet build_pairs(const ObservationSequence& seq, std::size_t history, std::size_t lag) {
  if (history < 1) throw std::invalid_argument("build_pairs: history length must be >= 1");
  if (lag < 1) throw std::invalid_argument("build_pairs: lag must be >= 1");
  PairSet pairs;
  pairs.lag = lag;
  pairs.history = history;
  const std::size_t len = seq.length();
  if (len + 1 <= history + lag) return pairs;  // N_k <= 0
  const std::size_t n = len - history - lag + 1;
  const std::size_t d = seq.dim();

  std::vector<double> z;
  z.reserve(n * history * d);
  std::vector<double> y;
  y.reserve(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < history; ++s) {
      auto row = seq.row(i + s);
      z.insert(z.end(), row.begin(), row.end());
    }
    auto target = seq.row(i + history - 1 + lag);
    y.insert(y.end(), target.begin(), target.end());
  }
  pairs.histories = transport::PointSet(history * d, std::move(z));
  pairs.targets = transport::PointSet(d, std::move(y));
  return pairs;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return s;
}

// Appends the nearest neighbours of `query` to `out`; `scratch` is reused.
void nearest(const transport::PointSet& z, std::size_t query, std::size_t count,
             bool leave_one_out, std::vector<std::pair<double, std::size_t>>& scratch,
             std::vector<std::size_t>& out) {
  scratch.clear();
  const auto q = z[query];
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (leave_one_out && j == query) continue;
    scratch.emplace_back(squared_distance(q, z[j]), j);
  }
  const std::size_t take = std::min(count, scratch.size());
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(take),
                    scratch.end());
  for (std::size_t t = 0; t < take; ++t) out.push_back(scratch[t].second);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::size_t kDistanceCacheLimit = 2048;

// Everything about one lag that does not depend on the target permutation:
// the pairs, the neighbourhoods, and the distinct target values ("classes")
// with their global multiplicities.
//
// W1 is evaluated on the signed measure (local - global): mass shared by both
// laws at the same point stays in place at zero cost, so only the excess of
// each law needs to be transported. This is exact for any metric ground cost.
class LagProblem {
 public:
  LagProblem(const ObservationSequence& seq, std::size_t history, std::size_t lag,
             std::size_t neighbors, bool leave_one_out) {
    const std::size_t len = seq.length();
    if (len < history + lag) return;
    if (lag >= cutoff_lag(len, history, neighbors, leave_one_out)) return;

    PairSet pairs = build_pairs(seq, history, lag);
    n_ = pairs.size();
    if (n_ == 0) return;
    active_ = true;

    std::vector<std::pair<double, std::size_t>> scratch;
    neighbor_index_.reserve(n_ * neighbors);
    neighbor_offset_.reserve(n_ + 1);
    neighbor_offset_.push_back(0);
    for (std::size_t i = 0; i < n_; ++i) {
      nearest(pairs.histories, i, neighbors, leave_one_out, scratch, neighbor_index_);
      neighbor_offset_.push_back(neighbor_index_.size());
    }
    build_classes(pairs.targets);
  }

  bool active() const { return active_; }
  std::size_t size() const { return n_; }

  // max_i W1(local_i, global) where target j is replaced by target source[j].
  // An empty `source` means the identity.
  double score(std::span<const std::size_t> source, transport::TransportSolver& solver) {
    if (!active_) return 0.0;
    double best = 0.0;
    const double n = static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t begin = neighbor_offset_[i];
      const std::size_t end = neighbor_offset_[i + 1];
      const double local_n = static_cast<double>(end - begin);
      for (std::size_t t = begin; t < end; ++t) {
        const std::size_t j = neighbor_index_[t];
        ++local_count_[class_of_[source.empty() ? j : source[j]]];
      }

      // Masses in units of 1 / (|N_i| * N): each neighbour carries N, each
      // global point |N_i|. Classes are visited in axis order so both sides
      // arrive sorted for the north-west start.
      src_class_.clear();
      src_mass_.clear();
      dst_class_.clear();
      dst_mass_.clear();
      for (std::size_t c : class_order_) {
        const double net = local_count_[c] * n - class_count_[c] * local_n;
        if (net > 0) {
          src_class_.push_back(c);
          src_mass_.push_back(net);
        } else if (net < 0) {
          dst_class_.push_back(c);
          dst_mass_.push_back(-net);
        }
      }
      for (std::size_t t = begin; t < end; ++t) {
        const std::size_t j = neighbor_index_[t];
        local_count_[class_of_[source.empty() ? j : source[j]]] = 0;
      }
      if (src_class_.empty()) continue;

      cost_.resize(src_class_.size() * dst_class_.size());
      double* out = cost_.data();
      for (std::size_t a : src_class_) {
        for (std::size_t b : dst_class_) *out++ = class_distance(a, b);
      }
      const double w = solver.solve(src_mass_, dst_mass_, cost_) / (local_n * n);
      best = std::max(best, w);
    }
    return best;
  }

 private:
  void build_classes(const transport::PointSet& targets) {
    std::vector<std::size_t> order(n_);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      auto x = targets[a];
      auto y = targets[b];
      return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
    });
    class_of_.assign(n_, 0);
    for (std::size_t t = 0; t < n_; ++t) {
      const std::size_t j = order[t];
      if (t == 0 || !std::ranges::equal(targets[j], targets[order[t - 1]])) {
        class_points_.push_back(targets[j]);
        class_count_.push_back(0.0);
      }
      class_of_[j] = class_count_.size() - 1;
      class_count_.back() += 1.0;
    }
    const std::size_t classes = class_count_.size();
    local_count_.assign(classes, 0.0);

    const std::vector<double> keys = transport::principal_axis_keys(class_points_);
    class_order_.resize(classes);
    std::iota(class_order_.begin(), class_order_.end(), std::size_t{0});
    std::stable_sort(class_order_.begin(), class_order_.end(),
                     [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

    if (classes <= kDistanceCacheLimit) {
      distances_.resize(classes * classes);
      for (std::size_t a = 0; a < classes; ++a) {
        distances_[a * classes + a] = 0.0;
        for (std::size_t b = a + 1; b < classes; ++b) {
          const double dist = transport::euclidean(class_points_[a], class_points_[b]);
          distances_[a * classes + b] = dist;
          distances_[b * classes + a] = dist;
        }
      }
    }
  }

  double class_distance(std::size_t a, std::size_t b) const {
    if (!distances_.empty()) return distances_[a * class_count_.size() + b];
    return transport::euclidean(class_points_[a], class_points_[b]);
  }

  std::size_t n_ = 0;
  bool active_ = false;

  std::vector<std::size_t> neighbor_index_;
  std::vector<std::size_t> neighbor_offset_;

  std::vector<std::size_t> class_of_;
  transport::PointSet class_points_;
  std::vector<double> class_count_;
  std::vector<std::size_t> class_order_;
  std::vector<double> distances_;

  std::vector<double> local_count_;
  std::vector<std::size_t> src_class_, dst_class_;
  std::vector<double> src_mass_, dst_mass_, cost_;
};

LagEstimate estimate_with(const ObservationSequence& seq, const EstimatorConfig& config,
                          std::size_t lag, transport::TransportSolver& solver) {
  LagProblem problem(seq, config.history, lag, config.neighbors, config.leave_one_out);
  LagEstimate out;
  if (!problem.active()) return out;
  out.observed = problem.score({}, solver);
  if (config.permutations == 0) {
    out.value = out.observed;
    return out;
  }
  double total = 0.0;
  for (std::size_t b = 0; b < config.permutations; ++b) {
    const auto perm = permutation_for(config.seed, lag, b, problem.size());
    total += problem.score(perm, solver);
  }
  out.baseline = total / static_cast<double>(config.permutations);
  out.value = std::max(out.observed - out.baseline, 0.0);
  return out;
}

}  // namespace

std::vector<std::size_t> knn_indices(const transport::PointSet& histories, std::size_t query,
                                     std::size_t count, bool leave_one_out) {
  if (histories.empty()) throw std::invalid_argument("knn_indices: no histories");
  if (query >= histories.size()) throw std::out_of_range("knn_indices: query index out of range");
  if (count < 1) throw std::invalid_argument("knn_indices: neighbour count must be >= 1");
  std::vector<std::pair<double, std::size_t>> scratch;
  std::vector<std::size_t> out;
  nearest(histories, query, count, leave_one_out, scratch, out);
  return out;
}

std::size_t cutoff_lag(std::size_t length, std::size_t history, std::size_t neighbors,
                       bool leave_one_out) {
  // leave-one-out: zero once N_k - 1 <= r, i.e. k >= T - m - r.
  // otherwise:     zero once N_k <= r,     i.e. k >= T - m + 1 - r.
  const std::size_t used = history + neighbors - (leave_one_out ? 0 : 1);
  if (length <= used + 1) return 1;
  return length - used;
}

double tau_obs(const ObservationSequence& seq, std::size_t history, std::size_t lag,
               std::size_t neighbors, bool leave_one_out) {
  if (neighbors < 1) throw std::invalid_argument("tau_obs: neighbour count must be >= 1");
  if (history < 1 || lag < 1) throw std::invalid_argument("tau_obs: history and lag must be >= 1");
  LagProblem problem(seq, history, lag, neighbors, leave_one_out);
  transport::TransportSolver solver;
  return problem.score({}, solver);
}

double tau_perm_baseline(const ObservationSequence& seq, std::size_t history, std::size_t lag,
                         std::size_t neighbors, std::size_t permutations, bool leave_one_out,
                         std::uint64_t seed) {
  if (permutations < 1) throw std::invalid_argument("tau_perm_baseline: B must be >= 1");
  if (neighbors < 1) throw std::invalid_argument("tau_perm_baseline: neighbour count must be >= 1");
  if (history < 1 || lag < 1)
    throw std::invalid_argument("tau_perm_baseline: history and lag must be >= 1");
  LagProblem problem(seq, history, lag, neighbors, leave_one_out);
  if (!problem.active()) return 0.0;
  transport::TransportSolver solver;
  double total = 0.0;
  for (std::size_t b = 0; b < permutations; ++b) {
    total += problem.score(permutation_for(seed, lag, b, problem.size()), solver);
  }
  return total / static_cast<double>(permutations);
}

std::vector<std::size_t> permutation_for(std::uint64_t seed, std::size_t lag,
                                         std::size_t replicate, std::size_t n) {
  const std::uint64_t stream =
      splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(lag)) ^
                 static_cast<std::uint64_t>(replicate));
  std::mt19937_64 rng(stream);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

LagEstimate estimate_lag(const ObservationSequence& seq, const EstimatorConfig& config,
                         std::size_t lag) {
  config.validate();
  if (lag < 1) throw std::invalid_argument("estimate_lag: lag must be >= 1");
  transport::TransportSolver solver;
  return estimate_with(seq, config, lag, solver);
}

double tau_hat(const ObservationSequence& seq, const EstimatorConfig& config, std::size_t lag) {
  return estimate_lag(seq, config, lag).value;
}

TauCurve tau_curve(const ObservationSequence& seq, const EstimatorConfig& config) {
  config.validate();
  TauCurve curve;
  curve.config = config;
  curve.source_label = seq.label();
  curve.values.assign(config.max_lag, 0.0);

  unsigned workers = config.threads == 0 ? std::thread::hardware_concurrency() : config.threads;
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(config.max_lag)));

  // Each lag owns its output slot and its derived RNG streams.
  std::atomic<std::size_t> next{1};
  auto work = [&] {
    transport::TransportSolver solver;
    for (std::size_t k = next++; k <= config.max_lag; k = next++) {
      curve.values[k - 1] = estimate_with(seq, config, k, solver).value;
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return curve;
}

AggregatedCurve aggregate_values(std::span<const std::vector<double>> curves) {
  if (curves.empty()) throw std::invalid_argument("aggregate: no curves");
  const std::size_t lags = curves.front().size();
  for (const auto& c : curves)
    if (c.size() != lags) throw std::invalid_argument("aggregate: curves differ in maximum lag");

  const std::size_t m = curves.size();
  AggregatedCurve out;
  out.replicates = m;
  out.mean.assign(lags, 0.0);
  out.standard_error.assign(lags, std::nullopt);
  for (std::size_t k = 0; k < lags; ++k) {
    double sum = 0.0;
    for (const auto& c : curves) sum += c[k];
    const double mean = sum / static_cast<double>(m);
    out.mean[k] = mean;
    if (m > 1) {
      double ss = 0.0;
      for (const auto& c : curves) ss += (c[k] - mean) * (c[k] - mean);
      const double sd = std::sqrt(ss / static_cast<double>(m - 1));
      out.standard_error[k] = sd / std::sqrt(static_cast<double>(m));
    }
  }
  return out;
}

AggregatedCurve aggregate_curves(std::span<const TauCurve> curves) {
  std::vector<std::vector<double>> values;
  values.reserve(curves.size());
  for (const auto& c : curves) values.push_back(c.values);
  return aggregate_values(values);
}

}  // namespace taumix
