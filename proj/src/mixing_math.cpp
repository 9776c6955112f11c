#include "taumix/mixing_math.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace taumix {

std::size_t n_eff_search(const std::function<double(std::size_t)>& tau_of, std::size_t n,
                         double bound, double sigma) {
  for (std::size_t m = n; m >= 1; --m) {
    const double md = static_cast<double>(m);
    const double threshold = std::max(bound / md, sigma / std::sqrt(md));
    if (tau_of(n / m) <= threshold) return m;
  }
  return 1;
}

double n_eff_lower_bound(double c0, double c1, double bound, double n) {
  if (!(c0 > 0.0 && c1 > 0.0 && bound > 0.0 && n > 0.0))
    throw std::invalid_argument("n_eff_lower_bound: parameters must be positive");
  const double denom = std::max(1.0, std::log(c0 * c1 * n / bound));
  return std::min(0.5 * n * c1 / denom, n);
}

double tau_bound_from_beta(const MixingBound& beta, double diameter, std::size_t k) {
  if (!(diameter > 0.0 && beta.C > 0.0 && beta.c > 0.0) || k < 1)
    throw std::invalid_argument("tau_bound_from_beta: inputs must be positive");
  return 2.0 * diameter * beta.C * std::exp(-beta.c * static_cast<double>(k));
}

DecayFit fit_log_linear(std::span<const double> values, std::size_t cutoff) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t k = i + 1;
    if (cutoff != 0 && k >= cutoff) break;
    if (values[i] > 0.0 && std::isfinite(values[i])) {
      xs.push_back(static_cast<double>(k));
      ys.push_back(std::log(values[i]));
    }
  }
  if (xs.size() < 2)
    throw std::invalid_argument("decay fit needs at least 2 positive points, got " +
                                std::to_string(xs.size()));
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  DecayFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.c0 = std::exp(fit.intercept);
  fit.c1 = -fit.slope;
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    sse += r * r;
  }
  fit.rmse = std::sqrt(sse / n);
  fit.n_points_used = xs.size();
  return fit;
}

DecayFit fit_exponential_decay(std::span<const double> values, std::size_t cutoff) {
  DecayFit fit = fit_log_linear(values, cutoff);
  if (!(fit.c1 > 0.0)) throw NoDecayDetected("no exponential decay detected");
  return fit;
}

}  // namespace taumix
