#include <cmath>
#include <numeric>
#include <stdexcept>

#include "doctest.h"
#include "taumix/processes.hpp"

using namespace taumix;

namespace {

double autocorr(const std::vector<double>& x, std::size_t lag) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    den += (x[t] - mean) * (x[t] - mean);
    if (t + lag < x.size()) num += (x[t] - mean) * (x[t + lag] - mean);
  }
  return num / den;
}

double variance(const std::vector<double>& x) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
  double s = 0.0;
  for (double v : x) s += (v - mean) * (v - mean);
  return s / double(x.size() - 1);
}

}  // namespace

TEST_CASE("iid generators") {
  ProcessSpec spec;
  spec.kind = ProcessKind::iid_gaussian;
  spec.length = 1;
  CHECK(generate(spec).length() == 1);

  spec.length = 3;
  spec.seed = 7;
  const auto golden = generate(spec);
  CHECK(golden.values()[0] == doctest::Approx(0.87269516693547444).epsilon(1e-15));
  CHECK(golden.values()[1] == doctest::Approx(-0.97256287765187455).epsilon(1e-15));
  CHECK(golden.values()[2] == doctest::Approx(0.54730999264855151).epsilon(1e-15));
  CHECK(generate(spec) == golden);

  spec.length = 20000;
  spec.innovation_sd = 2.0;
  CHECK(variance(generate(spec).values()) == doctest::Approx(4.0).epsilon(0.05));
  spec.kind = ProcessKind::iid_uniform;
  spec.dim = 3;
  const auto u = generate(spec);
  CHECK(u.dim() == 3);
  CHECK(variance(u.values()) == doctest::Approx(1.0 / 12.0).epsilon(0.05));
  for (double v : u.values()) CHECK((v >= 0.0 && v < 1.0));
}

TEST_CASE("AR(1) autocorrelation") {
  CHECK(std::abs(autocorr(gen_ar1(0.0, 1.0, 10000, 1).values(), 1)) < 0.03);
  const auto x = gen_ar1(0.9, 1.0, 10000, 2).values();
  CHECK(std::abs(autocorr(x, 1) - 0.9) <= 0.03);
  const auto zero = gen_ar1(0.5, 0.0, 50, 3).values();
  for (double v : zero) CHECK(v == 0.0);
  CHECK_THROWS_AS(gen_ar1(1.0, 1.0, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(gen_ar1(-1.2, 1.0, 10, 1), std::invalid_argument);
  CHECK(gen_ar1(0.3, 1.0, 100, 9) == gen_ar1(0.3, 1.0, 100, 9));
}

TEST_CASE("AR(1) starts from the stationary law") {
  // Var(x_1) = sd^2 / (1 - rho^2) over independent seeds.
  std::vector<double> first;
  for (std::uint64_t s = 0; s < 20000; ++s) first.push_back(gen_ar1(0.8, 1.0, 1, s).values()[0]);
  CHECK(variance(first) == doctest::Approx(1.0 / (1.0 - 0.64)).epsilon(0.05));
}

TEST_CASE("MA(q) autocorrelation") {
  const auto x = gen_ma({1.0, 1.0}, 10000, 4).values();
  CHECK(std::abs(autocorr(x, 1) - 0.5) <= 0.03);
  CHECK(std::abs(autocorr(x, 2)) <= 0.03);
  CHECK(std::abs(autocorr(x, 3)) <= 0.03);
  CHECK(std::abs(autocorr(gen_ma({1.0}, 10000, 5).values(), 1)) <= 0.03);
  const auto silent = gen_ma({0.0, 0.0, 0.0}, 30, 6).values();
  for (double v : silent) CHECK(v == 0.0);
  CHECK_THROWS_AS(gen_ma({}, 10, 1), std::invalid_argument);
}

TEST_CASE("finite Markov chains") {
  const auto still = gen_markov_chain({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, 50, 8, false).values();
  for (double v : still) CHECK(v == still[0]);

  const std::vector<std::vector<double>> p{{0.9, 0.1}, {0.1, 0.9}};
  const auto x = gen_markov_chain(p, 10000, 9, false).values();
  double counts[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t t = 1; t < x.size(); ++t) counts[int(x[t - 1])][int(x[t])] += 1;
  for (int i = 0; i < 2; ++i) {
    const double row = counts[i][0] + counts[i][1];
    for (int j = 0; j < 2; ++j) CHECK(std::abs(counts[i][j] / row - p[i][j]) <= 0.02);
  }

  const auto hot = gen_markov_chain(p, 100, 9, true);
  CHECK(hot.dim() == 2);
  for (std::size_t t = 0; t < hot.length(); ++t) {
    const auto r = hot.row(t);
    CHECK(r[0] + r[1] == 1.0);
    CHECK(r[int(x[t])] == 1.0);
  }
  CHECK(gen_markov_chain(p, 8, 5, false).values() ==
        std::vector<double>{1, 0, 0, 0, 0, 0, 0, 0});

  CHECK_THROWS_AS(gen_markov_chain({{0.5, 0.4}, {0.5, 0.5}}, 10, 1, false), std::invalid_argument);
  CHECK_THROWS_AS(gen_markov_chain({{1.2, -0.2}, {0.5, 0.5}}, 10, 1, false), std::invalid_argument);
  CHECK_THROWS_AS(gen_markov_chain({{1.0, 0.0}}, 10, 1, false), std::invalid_argument);
}

TEST_CASE("identical rows give an iid categorical chain") {
  const std::vector<std::vector<double>> p{{0.2, 0.8}, {0.2, 0.8}};
  const auto x = gen_markov_chain(p, 20000, 3, false).values();
  const double ones = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
  CHECK(std::abs(ones - 0.8) <= 0.02);
  CHECK(std::abs(autocorr(x, 1)) <= 0.03);
}

TEST_CASE("process kind names") {
  for (auto k : {ProcessKind::iid_gaussian, ProcessKind::iid_uniform, ProcessKind::ar1,
                 ProcessKind::ma, ProcessKind::finite_markov})
    CHECK(process_kind_from_string(to_string(k)) == k);
  CHECK(process_kind_from_string("ma_q") == ProcessKind::ma);
  CHECK_THROWS_AS(process_kind_from_string("garch"), std::invalid_argument);
}
