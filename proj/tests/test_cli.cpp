#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "taumix");
  std::ostringstream out, err;
  const int code = taumix::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("taumix_cli_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

const std::string fixture = std::string(TAUMIX_FIXTURES) + "/minibatch_128.jsonl";

}  // namespace

TEST_CASE("cli gen is deterministic and feeds estimate") {
  TempDir dir;
  REQUIRE(run({"gen", "--kind", "iid_gaussian", "--T", "200", "--seed", "7", "--out", dir / "a.jsonl"}).code == 0);
  REQUIRE(run({"gen", "--kind", "iid_gaussian", "--T", "200", "--seed", "7", "--out", dir / "b.jsonl"}).code == 0);
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  CHECK(slurp(dir / "a.jsonl") != run({"gen", "--T", "200", "--seed", "8"}).out);

  const auto est = run({"estimate", "-i", dir / "a.jsonl", "--K", "5", "--seed", "1"});
  CHECK(est.code == 0);
  const auto rows = csv_rows(est.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0][3] == "1");
  CHECK(rows[0][2].empty());
  CHECK(run({"estimate", "-i", dir / "a.jsonl", "--K", "5", "--seed", "1"}).out == est.out);
  CHECK(run({"estimate", "-i", dir / "a.jsonl", "--max-lag", "5", "--seed", "1"}).out == est.out);

  for (const char* kind : {"iid_uniform", "ar1", "ma", "finite_markov"})
    CHECK(run({"gen", "--kind", kind, "--T", "30"}).code == 0);
  const auto hot = run({"gen", "--kind", "finite_markov", "--one-hot", "--T", "3"}).out;
  CHECK((hot.find("[0,1]") != std::string::npos || hot.find("[1,0]") != std::string::npos));
}

TEST_CASE("cli estimate on the minibatch fixture shows the cutoff") {
  TempDir dir;
  const auto est = run({"estimate", "--per-minibatch", "-i", fixture, "--m", "1", "--r", "20",
                        "--K", "127", "--out-dir", dir / "per"});
  REQUIRE(est.code == 0);
  const auto rows = csv_rows(est.out);
  REQUIRE(rows.size() == 127);
  for (std::size_t k = 107; k <= 127; ++k) CHECK(rows[k - 1][1] == "0");
  CHECK(fs::exists(dir.path / "per" / "source_0001.csv"));
}

TEST_CASE("cli aggregate and fit") {
  TempDir dir;
  {
    std::ofstream f(dir / "c.csv");
    f << "k,mean,se,n_replicates\n";
    for (int k = 1; k <= 10; ++k) f << k << ',' << 0.8 * std::exp(-0.4 * k) << ",,1\n";
  }
  const auto agg = run({"aggregate", dir / "c.csv", dir / "c.csv", dir / "c.csv", dir / "c.csv",
                        "--out", dir / "agg.csv"});
  REQUIRE(agg.code == 0);
  for (const auto& row : csv_rows(slurp(dir / "agg.csv"))) {
    CHECK(row[2] == "0");
    CHECK(row[3] == "4");
  }
  const auto fit = run({"fit", "-i", dir / "agg.csv"});
  REQUIRE(fit.code == 0);
  const auto j = nlohmann::json::parse(fit.out);
  CHECK(j["c1_hat"].get<double>() == doctest::Approx(0.4));
  CHECK(j["c0_hat"].get<double>() == doctest::Approx(0.8));
  CHECK(j["n_points_used"] == 10);

  {
    std::ofstream f(dir / "flat.csv");
    f << "k,mean,se,n_replicates\n1,0.5,,1\n2,0.5,,1\n3,0.5,,1\n";
  }
  const auto flat = run({"fit", "-i", dir / "flat.csv"});
  CHECK(flat.code == 2);
  CHECK(flat.err.find("no exponential decay") != std::string::npos);
  {
    std::ofstream f(dir / "short.csv");
    f << "k,mean,se,n_replicates\n1,0.5,,1\n";
  }
  CHECK(run({"aggregate", dir / "c.csv", dir / "short.csv"}).code == 2);
}

TEST_CASE("cli effsize") {
  const auto r = run({"effsize", "--c0", "1", "--c1", "1", "--n", "1000"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["n_eff_search"].get<double>() >= std::floor(j["lower_bound"].get<double>()));
  CHECK(run({"effsize", "--c0", "0", "--n", "10"}).code == 1);
}

TEST_CASE("cli verify-batch") {
  const auto ok = run({"verify-batch", "-i", fixture});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("\"failures\":0") != std::string::npos);

  TempDir dir;
  {
    std::ofstream f(dir / "bad.jsonl");
    f << R"({"update":1,"sampler":{"kind":"contiguous_blocks","params":{"block":2,"gap":0,"start":1}},"indices":[2,1],"rows":[[0],[1]]})"
      << "\n"
      << R"({"update":2,"sampler":{"kind":"uniform_with_replacement"},"indices":[1,1],"rows":[[0],[1]]})"
      << "\n";
  }
  const auto bad = run({"verify-batch", "-i", dir / "bad.jsonl"});
  CHECK(bad.code == 2);
  CHECK(bad.out.find("\"failures\":1") != std::string::npos);
}

TEST_CASE("cli exit codes") {
  CHECK(run({}).code == 1);
  CHECK(run({"gen", "--bogus"}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"gen", "--kind", "garch"}).code == 1);
  CHECK(run({"gen", "--kind", "ar1", "--rho", "1.5"}).code == 1);

  TempDir dir;
  {
    std::ofstream f(dir / "broken.jsonl");
    f << "{\"t\":1,\"x\":[1]}\n{\"t\":2,\"x\":[1]\n";
  }
  const auto broken = run({"estimate", "-i", dir / "broken.jsonl"});
  CHECK(broken.code == 2);
  CHECK(broken.err.find("line 2") != std::string::npos);
  CHECK(run({"estimate", "-i", dir / "missing.jsonl"}).code == 2);
  CHECK(run({"estimate", "-i", fixture}).code == 2);  // minibatch log read as a trajectory

  CHECK(run({"train", "--preset", "frozenlake-literal", "--episodes", "2"}).code == 3);
  CHECK(run({"train", "--preset", "frozenlake", "--buffer", "100", "--start-time", "10"}).code == 3);
  CHECK(run({"train", "--preset", "pong"}).code == 1);
}

TEST_CASE("cli config file supplies option values") {
  TempDir dir;
  {
    std::ofstream f(dir / "gen.cfg");
    f << "# synthetic\nkind = ar1\nrho=0.5\nT=40\nseed=3\n";
  }
  const auto from_cfg = run({"gen", "--config", dir / "gen.cfg"});
  REQUIRE(from_cfg.code == 0);
  CHECK(from_cfg.out == run({"gen", "--kind", "ar1", "--rho", "0.5", "--T", "40", "--seed", "3"}).out);
  // Flags on the command line win over the file.
  CHECK(run({"gen", "--config", dir / "gen.cfg", "--T", "5"}).out ==
        run({"gen", "--kind", "ar1", "--rho", "0.5", "--T", "5", "--seed", "3"}).out);
  {
    std::ofstream f(dir / "bad.cfg");
    f << "nonsense\n";
  }
  CHECK(run({"gen", "--config", dir / "bad.cfg"}).code == 1);
  {
    std::ofstream f(dir / "unknown.cfg");
    f << "colour=blue\n";
  }
  CHECK(run({"gen", "--config", dir / "unknown.cfg"}).code == 1);
}

TEST_CASE("cli train, rollout and minibatch round trip") {
  TempDir dir;
  const auto train = run({"train", "--preset", "frozenlake", "--episodes", "400", "--seed", "2",
                          "--minibatches", dir / "mb.jsonl", "--trajectory", dir / "traj.jsonl",
                          "--returns", dir / "ret.csv", "--policy", dir / "q.json"});
  REQUIRE(train.code == 0);
  CHECK(slurp(dir / "ret.csv").rfind("episode,return\n", 0) == 0);
  CHECK(run({"verify-batch", "-i", dir / "mb.jsonl"}).code == 0);
  const auto est = run({"estimate", "--per-minibatch", "-i", dir / "mb.jsonl", "--K", "3"});
  CHECK(est.code == 0);
  CHECK(run({"estimate", "-i", dir / "traj.jsonl", "--K", "2"}).code == 0);

  const auto roll = run({"rollout", "--policy", dir / "q.json", "--T-max", "30", "--seed", "4"});
  REQUIRE(roll.code == 0);
  CHECK(std::count(roll.out.begin(), roll.out.end(), '\n') == 30);
  const auto again = run({"rollout", "--policy", dir / "q.json", "--T-max", "30", "--seed", "4"});
  CHECK(again.out == roll.out);
  CHECK(run({"rollout", "--policy", dir / "missing.json"}).code == 2);
}
