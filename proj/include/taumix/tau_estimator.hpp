#pragma once

// Finite-history Wasserstein proxy for tau-dependence.
//
// For a sequence x_1..x_T, lag k and history length m, the pairs
//   Z_i = (x_i, ..., x_{i+m-1}),  Y_i = x_{i+m-1+k},  i = 1..N_k,
// with N_k = T - m - k + 1, define a global empirical law of the targets and,
// for every i, a local law over the targets of the r nearest histories of
// Z_i. The observed score is the largest W1 distance between a local law and
// the global law. A permutation baseline (targets shuffled, neighbourhoods
// kept) is subtracted and the result clipped at zero.
//
// Indices in this API are 0-based: pair i here is Z_{i+1} in the formulas.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taumix/sequence.hpp"
#include "taumix/transport.hpp"

namespace taumix {

struct EstimatorConfig {
  std::size_t history = 1;       // m
  std::size_t neighbors = 20;    // r
  std::size_t permutations = 1;  // B; 0 disables centering
  std::size_t max_lag = 20;      // K
  bool leave_one_out = true;
  std::uint64_t seed = 0;
  /// Worker threads for tau_curve; 0 uses the hardware concurrency.
  unsigned threads = 1;

  void validate() const;
};

struct PairSet {
  transport::PointSet histories;  // Z, dimension m * d
  transport::PointSet targets;    // Y, dimension d
  std::size_t lag = 0;
  std::size_t history = 0;

  std::size_t size() const { return targets.size(); }
  bool empty() const { return size() == 0; }
};

/// Pairs (Z_i, Y_i). Returns an empty set when N_k <= 0.
PairSet build_pairs(const ObservationSequence& seq, std::size_t history, std::size_t lag);

/// The `count` nearest histories to Z_query by Euclidean distance, ordered by
/// (distance, index). With leave_one_out the query itself is excluded. When
/// fewer candidates exist, all of them are returned.
std::vector<std::size_t> knn_indices(const transport::PointSet& histories, std::size_t query,
                                     std::size_t count, bool leave_one_out);

/// First lag at which the observed score is identically zero because every
/// neighbourhood exhausts the available pairs: T - m - r with leave-one-out,
/// T - m + 1 - r without. Never below 1.
std::size_t cutoff_lag(std::size_t length, std::size_t history, std::size_t neighbors,
                       bool leave_one_out);

/// Raw score: max_i W1(local law at Z_i, global law).
double tau_obs(const ObservationSequence& seq, std::size_t history, std::size_t lag,
               std::size_t neighbors, bool leave_one_out);

/// Average over B replicates of the raw score recomputed on permuted targets
/// with the original neighbourhoods. Throws for B = 0.
double tau_perm_baseline(const ObservationSequence& seq, std::size_t history, std::size_t lag,
                         std::size_t neighbors, std::size_t permutations, bool leave_one_out,
                         std::uint64_t seed);

/// Permutation sigma_b of {0..n-1} used for replicate `replicate` at `lag`.
/// Entry j is the source index of permuted target j, i.e. Y'_j = Y_{perm[j]}.
std::vector<std::size_t> permutation_for(std::uint64_t seed, std::size_t lag,
                                         std::size_t replicate, std::size_t n);

struct LagEstimate {
  double observed = 0.0;
  double baseline = 0.0;
  double value = 0.0;  // max(observed - baseline, 0)
};

LagEstimate estimate_lag(const ObservationSequence& seq, const EstimatorConfig& config,
                         std::size_t lag);

/// Bias-corrected score at one lag. With permutations = 0 the raw score is
/// returned uncentered.
double tau_hat(const ObservationSequence& seq, const EstimatorConfig& config, std::size_t lag);

struct TauCurve {
  std::vector<double> values;  // values[k - 1] = tau_hat(k), k = 1..K
  EstimatorConfig config;
  std::string source_label;

  std::size_t max_lag() const { return values.size(); }
  double at(std::size_t lag) const { return values.at(lag - 1); }
};

TauCurve tau_curve(const ObservationSequence& seq, const EstimatorConfig& config);

struct AggregatedCurve {
  std::vector<double> mean;
  /// Standard error sd / sqrt(M) with the M - 1 denominator; empty optionals
  /// when M = 1.
  std::vector<std::optional<double>> standard_error;
  std::size_t replicates = 0;

  std::size_t max_lag() const { return mean.size(); }
};

AggregatedCurve aggregate_curves(std::span<const TauCurve> curves);
/// Same, on raw per-lag value vectors.
AggregatedCurve aggregate_values(std::span<const std::vector<double>> curves);

}  // namespace taumix
