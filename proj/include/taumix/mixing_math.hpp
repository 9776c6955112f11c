#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>

namespace taumix {

/// max{1 <= m <= n : tau(floor(n/m)) <= max(bound/m, sigma/sqrt(m))}, or 1
/// when no m qualifies.
std::size_t n_eff_search(const std::function<double(std::size_t)>& tau_of, std::size_t n,
                         double bound, double sigma);

/// min{(n/2) c1 / max(1, log(c0 c1 n / bound)), n}.
double n_eff_lower_bound(double c0, double c1, double bound, double n);

struct MixingBound {
  enum class Kind { tau, beta };
  double C = 1.0;
  double c = 1.0;
  Kind kind = Kind::beta;
};

/// 2 * diameter * C_beta * exp(-c_beta * k).
double tau_bound_from_beta(const MixingBound& beta, double diameter, std::size_t k);

class NoDecayDetected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DecayFit {
  double c0 = 0.0;
  double c1 = 0.0;
  double intercept = 0.0;  // log c0
  double slope = 0.0;      // -c1
  double rmse = 0.0;       // residual of log values
  std::size_t n_points_used = 0;
};

/// OLS of log(values[k-1]) on k over strictly positive entries with
/// k < cutoff (cutoff 0 means no limit). Throws std::invalid_argument with
/// fewer than two usable points.
DecayFit fit_log_linear(std::span<const double> values, std::size_t cutoff = 0);

/// fit_log_linear, then throws NoDecayDetected unless the rate is positive.
DecayFit fit_exponential_decay(std::span<const double> values, std::size_t cutoff = 0);

}  // namespace taumix
