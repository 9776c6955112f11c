#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "taumix/io.hpp"

using namespace taumix;

namespace {

template <class F>
std::size_t format_error_line(F&& f) {
  try {
    f();
  } catch (const io::FormatError& e) {
    return e.line();
  }
  return 999;
}

}  // namespace

TEST_CASE("shortest round-trip numbers") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(1.0) == "1");
  CHECK(io::format_double(-2.5e-300) == "-2.5e-300");
  const double x = 0.1 + 0.2;
  CHECK(std::stod(io::format_double(x)) == x);
}

TEST_CASE("trajectory JSONL round trip") {
  const auto seq = ObservationSequence::from_rows({{0.1, -2}, {1e-9, 3.25}, {7, 8}});
  std::stringstream ss;
  io::write_trajectory(ss, seq);
  CHECK(ss.str().substr(0, 24) == "{\"t\":1,\"x\":[0.1,-2]}\n{\"t");
  const auto back = io::read_trajectory(ss, "x");
  CHECK(back.values() == seq.values());
  CHECK(back.dim() == 2);
}

TEST_CASE("trajectory JSONL errors carry line numbers") {
  auto read = [](const std::string& text) {
    std::istringstream in(text);
    return io::read_trajectory(in);
  };
  CHECK(format_error_line([&] { read("{\"t\":1,\"x\":[1]}\n{\"t\":2,\"x\":[1,2]}\n"); }) == 2);
  CHECK(format_error_line([&] { read("{\"t\":1,\"x\":[1]}\nnot json\n"); }) == 2);
  CHECK(format_error_line([&] { read("{\"t\":2,\"x\":[1]}\n"); }) == 1);
  CHECK(format_error_line([&] { read("{\"t\":1,\"x\":[1]}\n\n{\"t\":1,\"x\":[2]}\n"); }) == 3);
  CHECK(format_error_line([&] { read("{\"t\":1,\"x\":[\"a\"]}\n"); }) == 1);
  CHECK(format_error_line([&] { read("{\"t\":1}\n"); }) == 1);
  CHECK(format_error_line([&] { read("{\"t\":1,\"x\":[]}\n"); }) == 1);
  CHECK(format_error_line([&] { read(""); }) == 0);
  CHECK(read("{\"t\":1,\"x\":[1]}\n{\"t\":3,\"x\":[2]}\n").length() == 2);
}

TEST_CASE("minibatch JSONL round trip") {
  MinibatchRecord rec;
  rec.update = 4;
  rec.batch.indices = {3, 4, 9};
  rec.batch.params = {SamplerKind::contiguous_blocks, 2, 0, 3};
  rec.rows = ObservationSequence::from_rows({{1, 0}, {0.5, 1}, {2, 1}});
  std::stringstream ss;
  io::write_minibatch(ss, rec);
  io::write_minibatch(ss, rec);
  const auto back = io::read_minibatches(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].update == 4);
  CHECK(back[0].batch.indices == rec.batch.indices);
  CHECK(back[0].batch.params == rec.batch.params);
  CHECK(back[0].rows.values() == rec.rows.values());

  std::istringstream bad(io::minibatch_line(rec) +
                         "\n{\"update\":1,\"sampler\":{\"kind\":\"x\"},\"indices\":[1],\"rows\":[[1,2]]}\n");
  CHECK(format_error_line([&] { io::read_minibatches(bad); }) == 2);
  std::istringstream ragged("{\"update\":1,\"sampler\":{\"kind\":\"uniform\"},\"indices\":[1,2],\"rows\":[[1,2]]}\n");
  CHECK(format_error_line([&] { io::read_minibatches(ragged); }) == 1);
}

TEST_CASE("curve CSV round trip") {
  const std::vector<std::vector<double>> reps{{1, 0.5, 0}, {3, 0.5, 0}};
  const auto agg = aggregate_values(reps);
  std::stringstream ss;
  io::write_curve_csv(ss, agg);
  CHECK(ss.str() == "k,mean,se,n_replicates\n1,2,1,2\n2,0.5,0,2\n3,0,0,2\n");
  const auto back = io::read_curve_csv(ss);
  CHECK(back.mean == agg.mean);
  CHECK(back.replicates == 2);

  TauCurve one;
  one.values = {0.25, 0};
  std::stringstream single;
  io::write_curve_csv(single, one);
  CHECK(single.str() == "k,mean,se,n_replicates\n1,0.25,,1\n2,0,,1\n");
  const auto parsed = io::read_curve_csv(single);
  CHECK_FALSE(parsed.standard_error[0].has_value());

  std::istringstream gap("k,mean,se,n_replicates\n1,0.2,,1\n3,0.1,,1\n");
  CHECK(format_error_line([&] { io::read_curve_csv(gap); }) == 3);
  std::istringstream header("k,m\n");
  CHECK(format_error_line([&] { io::read_curve_csv(header); }) == 1);
}

TEST_CASE("fit and policy JSON") {
  DecayFit fit;
  fit.c0 = 0.5;
  fit.c1 = 0.25;
  fit.rmse = 0.0;
  fit.n_points_used = 7;
  CHECK(io::fit_json(fit) == "{\"c0_hat\":0.5,\"c1_hat\":0.25,\"n_points_used\":7,\"rmse\":0.0}");

  auto q = QFunction::tabular(16, 4);
  std::stringstream ss;
  io::write_policy(ss, EnvKind::gridworld, q);
  const auto p = io::read_policy(ss);
  CHECK(p.env == EnvKind::gridworld);
  CHECK(p.q == q);
  std::stringstream wrong;
  io::write_policy(wrong, EnvKind::cartpole, q);
  CHECK_THROWS_AS(io::read_policy(wrong), io::FormatError);
}
