#pragma once

// Synthetic sequences with known dependence structure.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "taumix/sequence.hpp"

namespace taumix {

enum class ProcessKind { iid_gaussian, iid_uniform, ar1, ma, finite_markov };

std::string to_string(ProcessKind kind);
ProcessKind process_kind_from_string(const std::string& name);

struct ProcessSpec {
  ProcessKind kind = ProcessKind::iid_gaussian;
  std::size_t length = 0;  // T
  std::uint64_t seed = 0;

  std::size_t dim = 1;               // iid kinds only
  double rho = 0.0;                  // ar1
  double innovation_sd = 1.0;        // ar1, ma, iid_gaussian scale
  std::vector<double> ma_coeffs;     // ma: c_0..c_q
  std::vector<std::vector<double>> transition;  // finite_markov: row-stochastic P
  bool one_hot = false;              // finite_markov encoding

  void validate() const;
};

/// Dispatches on spec.kind.
ObservationSequence generate(const ProcessSpec& spec);

/// i.i.d. rows: standard normal scaled by innovation_sd, or uniform on [0, 1).
ObservationSequence gen_iid(const ProcessSpec& spec);

/// x_{t+1} = rho x_t + eps_t, eps_t ~ N(0, sd^2), started from the stationary
/// law N(0, sd^2 / (1 - rho^2)).
ObservationSequence gen_ar1(double rho, double innovation_sd, std::size_t length,
                            std::uint64_t seed);

/// x_t = sum_{j=0}^{q} c_j eps_{t-j}, eps ~ N(0, 1); a burn-in of 10 q
/// steps is discarded.
ObservationSequence gen_ma(const std::vector<double>& coeffs, std::size_t length,
                           std::uint64_t seed);

/// Finite Markov chain with uniform initial state. Rows are the state index
/// (d = 1) or its one-hot encoding (d = S).
ObservationSequence gen_markov_chain(const std::vector<std::vector<double>>& transition,
                                     std::size_t length, std::uint64_t seed, bool one_hot);

}  // namespace taumix
