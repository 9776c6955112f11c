#include "taumix/processes.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace taumix {

std::string to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::iid_gaussian: return "iid_gaussian";
    case ProcessKind::iid_uniform: return "iid_uniform";
    case ProcessKind::ar1: return "ar1";
    case ProcessKind::ma: return "ma";
    case ProcessKind::finite_markov: return "finite_markov";
  }
  return "unknown";
}

ProcessKind process_kind_from_string(const std::string& name) {
  if (name == "iid_gaussian") return ProcessKind::iid_gaussian;
  if (name == "iid_uniform") return ProcessKind::iid_uniform;
  if (name == "ar1") return ProcessKind::ar1;
  if (name == "ma" || name == "ma_q") return ProcessKind::ma;
  if (name == "finite_markov" || name == "markov") return ProcessKind::finite_markov;
  throw std::invalid_argument("unknown process kind '" + name + "'");
}

namespace {

void check_stochastic(const std::vector<std::vector<double>>& p) {
  if (p.empty()) throw std::invalid_argument("transition matrix is empty");
  for (const auto& row : p) {
    if (row.size() != p.size()) throw std::invalid_argument("transition matrix is not square");
    double total = 0.0;
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("transition matrix has a negative or non-finite entry");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("transition matrix row does not sum to 1");
  }
}

}  // namespace

void ProcessSpec::validate() const {
  switch (kind) {
    case ProcessKind::iid_gaussian:
    case ProcessKind::iid_uniform:
      if (dim < 1) throw std::invalid_argument("iid process: dim must be >= 1");
      break;
    case ProcessKind::ar1:
      if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("ar1: |rho| must be < 1");
      if (!(innovation_sd >= 0.0)) throw std::invalid_argument("ar1: innovation sd must be >= 0");
      break;
    case ProcessKind::ma:
      if (ma_coeffs.empty()) throw std::invalid_argument("ma: coefficient list is empty");
      for (double c : ma_coeffs)
        if (!std::isfinite(c)) throw std::invalid_argument("ma: non-finite coefficient");
      break;
    case ProcessKind::finite_markov:
      check_stochastic(transition);
      break;
  }
}

ObservationSequence generate(const ProcessSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case ProcessKind::iid_gaussian:
    case ProcessKind::iid_uniform: return gen_iid(spec);
    case ProcessKind::ar1: return gen_ar1(spec.rho, spec.innovation_sd, spec.length, spec.seed);
    case ProcessKind::ma: return gen_ma(spec.ma_coeffs, spec.length, spec.seed);
    case ProcessKind::finite_markov:
      return gen_markov_chain(spec.transition, spec.length, spec.seed, spec.one_hot);
  }
  throw std::invalid_argument("unknown process kind");
}

ObservationSequence gen_iid(const ProcessSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::vector<double> values(spec.length * spec.dim);
  if (spec.kind == ProcessKind::iid_uniform) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : values) v = u(rng);
  } else if (spec.kind == ProcessKind::iid_gaussian) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (double& v : values) v = spec.innovation_sd * n(rng);
  } else {
    throw std::invalid_argument("gen_iid: not an iid process kind");
  }
  return ObservationSequence(spec.dim, std::move(values), to_string(spec.kind));
}

ObservationSequence gen_ar1(double rho, double innovation_sd, std::size_t length,
                            std::uint64_t seed) {
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("ar1: |rho| must be < 1");
  if (!(innovation_sd >= 0.0)) throw std::invalid_argument("ar1: innovation sd must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(length);
  if (length > 0) {
    x[0] = innovation_sd / std::sqrt(1.0 - rho * rho) * n(rng);
    for (std::size_t t = 1; t < length; ++t) x[t] = rho * x[t - 1] + innovation_sd * n(rng);
  }
  return ObservationSequence(1, std::move(x), "ar1");
}

ObservationSequence gen_ma(const std::vector<double>& coeffs, std::size_t length,
                           std::uint64_t seed) {
  if (coeffs.empty()) throw std::invalid_argument("ma: coefficient list is empty");
  const std::size_t q = coeffs.size() - 1;
  const std::size_t burn = 10 * q;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> eps(length + burn + q);
  for (double& e : eps) e = n(rng);
  std::vector<double> x(length);
  for (std::size_t t = 0; t < length; ++t) {
    // eps index of the innovation entering at time t with delay 0.
    const std::size_t now = t + burn + q;
    double v = 0.0;
    for (std::size_t j = 0; j <= q; ++j) v += coeffs[j] * eps[now - j];
    x[t] = v;
  }
  return ObservationSequence(1, std::move(x), "ma");
}

ObservationSequence gen_markov_chain(const std::vector<std::vector<double>>& transition,
                                     std::size_t length, std::uint64_t seed, bool one_hot) {
  check_stochastic(transition);
  const std::size_t states = transition.size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> init(0, states - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const std::size_t dim = one_hot ? states : 1;
  std::vector<double> values;
  values.reserve(length * dim);
  std::size_t s = init(rng);
  for (std::size_t t = 0; t < length; ++t) {
    if (t > 0) {
      const double draw = u(rng);
      double acc = 0.0;
      std::size_t next = states - 1;
      for (std::size_t j = 0; j < states; ++j) {
        acc += transition[s][j];
        if (draw < acc) {
          next = j;
          break;
        }
      }
      // Guard against rounding in the cumulative sum landing on a zero row entry.
      while (transition[s][next] == 0.0 && next > 0) --next;
      s = next;
    }
    if (one_hot) {
      for (std::size_t j = 0; j < states; ++j) values.push_back(j == s ? 1.0 : 0.0);
    } else {
      values.push_back(static_cast<double>(s));
    }
  }
  return ObservationSequence(dim, std::move(values), "finite_markov");
}

}  // namespace taumix
