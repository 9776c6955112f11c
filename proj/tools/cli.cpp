#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "taumix/dqn.hpp"
#include "taumix/environments.hpp"
#include "taumix/io.hpp"
#include "taumix/mixing_math.hpp"
#include "taumix/processes.hpp"
#include "taumix/samplers.hpp"
#include "taumix/tau_estimator.hpp"

namespace taumix::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Writes to `fallback` for "-" or an empty path, otherwise to the file.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw UsageError("cannot write '" + path + "'");
    stream_ = file_.get();
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  return in;
}

std::vector<double> parse_list(const std::string& text, char sep = ',') {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, sep)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw UsageError("bad number '" + cell + "' in list '" + text + "'");
    }
  }
  return out;
}

// "0.9,0.1;0.1,0.9"
std::vector<std::vector<double>> parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) rows.push_back(parse_list(row));
  return rows;
}

unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---- gen ----

struct GenArgs {
  std::string kind = "iid_gaussian";
  std::size_t length = 500;
  std::uint64_t seed = 0;
  std::size_t dim = 1;
  double rho = 0.9;
  double sd = 1.0;
  std::string coeffs = "1,1";
  std::string transition = "0.9,0.1;0.1,0.9";
  bool one_hot = false;
  std::string out = "-";
};

void add_gen(CLI::App& app, GenArgs& a) {
  auto* sub = app.add_subcommand("gen", "Generate a synthetic trajectory as JSONL");
  sub->add_option("--kind", a.kind, "iid_gaussian, iid_uniform, ar1, ma, finite_markov")
      ->capture_default_str();
  sub->add_option("--T", a.length, "Sequence length")->capture_default_str();
  sub->add_option("--seed", a.seed)->capture_default_str();
  sub->add_option("--dim", a.dim, "Row dimension (iid kinds)")->capture_default_str();
  sub->add_option("--rho", a.rho, "AR(1) coefficient")->capture_default_str();
  sub->add_option("--sd", a.sd, "Innovation standard deviation")->capture_default_str();
  sub->add_option("--coeffs", a.coeffs, "MA coefficients c0,c1,...")->capture_default_str();
  sub->add_option("--transition", a.transition, "Markov rows, e.g. 0.9,0.1;0.1,0.9")
      ->capture_default_str();
  sub->add_flag("--one-hot", a.one_hot, "One-hot encode Markov states");
  sub->add_option("--out", a.out, "Output path, - for stdout")->capture_default_str();
}

int run_gen(const GenArgs& a, std::ostream& out) {
  ProcessSpec spec;
  try {
    spec.kind = process_kind_from_string(a.kind);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  spec.length = a.length;
  spec.seed = a.seed;
  spec.dim = a.dim;
  spec.rho = a.rho;
  spec.innovation_sd = a.sd;
  if (spec.kind == ProcessKind::ma) spec.ma_coeffs = parse_list(a.coeffs);
  if (spec.kind == ProcessKind::finite_markov) spec.transition = parse_matrix(a.transition);
  spec.one_hot = a.one_hot;
  if (a.length < 1) throw UsageError("--T must be >= 1");
  const ObservationSequence seq = generate(spec);
  Output o(a.out, out);
  io::write_trajectory(*o, seq);
  return ok;
}

// ---- train ----

struct TrainArgs {
  std::string preset = "frozenlake";
  std::optional<double> gamma, eps_initial, eps_min, exploration_fraction, lr, tau_target, slip;
  std::optional<std::size_t> buffer, episodes, batch, target_period, start_time, update_frequency,
      num_updates, block, gap, start;
  std::optional<std::string> sampler;
  std::uint64_t seed = 0;
  std::size_t log_every = 1;
  std::string trajectory, minibatches, returns, policy;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* sub = app.add_subcommand("train", "Train a DQN agent on a toy environment");
  sub->add_option("--preset", a.preset, "frozenlake, cartpole, or either with -literal")
      ->capture_default_str();
  sub->add_option("--gamma", a.gamma);
  sub->add_option("--buffer", a.buffer, "Replay buffer capacity");
  sub->add_option("--episodes", a.episodes);
  sub->add_option("--batch", a.batch, "Minibatch size");
  sub->add_option("--eps-initial", a.eps_initial);
  sub->add_option("--eps-min", a.eps_min);
  sub->add_option("--exploration-fraction", a.exploration_fraction);
  sub->add_option("--lr", a.lr, "Learning rate");
  sub->add_option("--tau-target", a.tau_target);
  sub->add_option("--target-period", a.target_period);
  sub->add_option("--start-time", a.start_time);
  sub->add_option("--update-frequency", a.update_frequency);
  sub->add_option("--num-updates", a.num_updates);
  sub->add_option("--sampler", a.sampler,
                  "uniform_with_replacement, uniform_without_replacement, contiguous_blocks, "
                  "contiguous_blocks_wraparound");
  sub->add_option("--block", a.block, "Block length b");
  sub->add_option("--gap", a.gap, "Gap length a");
  sub->add_option("--start", a.start, "Block start t0, 0 draws one per update");
  sub->add_option("--slip", a.slip, "Gridworld slip probability");
  sub->add_option("--seed", a.seed)->capture_default_str();
  sub->add_option("--log-every", a.log_every, "Log every n-th minibatch, 0 for none")
      ->capture_default_str();
  sub->add_option("--trajectory", a.trajectory, "Behaviour trajectory JSONL");
  sub->add_option("--minibatches", a.minibatches, "Minibatch log JSONL");
  sub->add_option("--returns", a.returns, "Episode returns CSV");
  sub->add_option("--policy", a.policy, "Learned Q function JSON");
}

int run_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  TrainConfig c;
  EnvKind env_kind;
  try {
    c = preset(a.preset);
    env_kind = preset_env(a.preset);
    if (a.sampler) c.sampler.kind = sampler_kind_from_string(*a.sampler);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto set = [](auto& field, const auto& opt) {
    if (opt) field = *opt;
  };
  set(c.gamma, a.gamma);
  set(c.buffer_capacity, a.buffer);
  set(c.max_episodes, a.episodes);
  set(c.minibatch_size, a.batch);
  set(c.eps_initial, a.eps_initial);
  set(c.eps_min, a.eps_min);
  set(c.exploration_fraction, a.exploration_fraction);
  set(c.learning_rate, a.lr);
  set(c.tau_target, a.tau_target);
  set(c.target_period, a.target_period);
  set(c.start_time, a.start_time);
  set(c.update_frequency, a.update_frequency);
  set(c.num_updates, a.num_updates);
  set(c.sampler.block, a.block);
  set(c.sampler.gap, a.gap);
  set(c.sampler.start, a.start);
  set(c.slip_prob, a.slip);
  c.seed = a.seed;
  c.validate();

  auto env = make_environment(env_kind, c.slip_prob);
  std::unique_ptr<Output> log;
  TrainOptions options;
  options.log_every = a.log_every;
  options.record_trajectory = !a.trajectory.empty();
  if (!a.minibatches.empty()) {
    log = std::make_unique<Output>(a.minibatches, out);
    options.sink = [&log](const MinibatchRecord& r) { io::write_minibatch(**log, r); };
  }
  const TrainResult result = dqn_train(*env, c, options);

  if (!a.trajectory.empty()) {
    Output o(a.trajectory, out);
    io::write_trajectory(*o, result.trajectory);
  }
  if (!a.returns.empty()) {
    Output o(a.returns, out);
    *o << "episode,return\n";
    for (std::size_t e = 0; e < result.episode_returns.size(); ++e)
      *o << e + 1 << ',' << io::format_double(result.episode_returns[e]) << '\n';
  }
  if (!a.policy.empty()) {
    Output o(a.policy, out);
    io::write_policy(*o, env_kind, result.q);
  }
  err << "train: " << result.env_steps << " steps, " << result.updates << " updates, "
            << result.skipped_updates << " skipped\n";
  return ok;
}

// ---- rollout ----

struct RolloutArgs {
  std::string policy;
  std::size_t t_max = 500;
  std::uint64_t seed = 0;
  std::string mode = "concatenate";
  double slip = 0.0;
  std::string out = "-";
};

void add_rollout(CLI::App& app, RolloutArgs& a) {
  auto* sub = app.add_subcommand("rollout", "Greedy rollout of a saved policy as JSONL");
  sub->add_option("--policy", a.policy, "Policy JSON written by train")->required();
  sub->add_option("--T-max", a.t_max, "Rollout length")->capture_default_str();
  sub->add_option("--seed", a.seed)->capture_default_str();
  sub->add_option("--mode", a.mode, "concatenate or truncate")
      ->check(CLI::IsMember({"concatenate", "truncate"}))
      ->capture_default_str();
  sub->add_option("--slip", a.slip, "Gridworld slip probability")->capture_default_str();
  sub->add_option("--out", a.out)->capture_default_str();
}

int run_rollout(const RolloutArgs& a, std::ostream& out) {
  auto in = open_input(a.policy);
  const io::Policy p = io::read_policy(in);
  auto env = make_environment(p.env, a.slip);
  const auto seq = greedy_rollout(*env, p.q, a.t_max, a.seed,
                                  a.mode == "truncate" ? RolloutMode::truncate
                                                       : RolloutMode::concatenate);
  Output o(a.out, out);
  io::write_trajectory(*o, seq);
  return ok;
}

// ---- estimate ----

struct EstimateArgs {
  std::vector<std::string> inputs;
  std::size_t m = 1;
  std::size_t r = 20;
  std::size_t b = 1;
  std::size_t k = 20;
  std::uint64_t seed = 0;
  bool no_loo = false;
  bool per_minibatch = false;
  unsigned threads = 0;
  std::string out = "-";
  std::string out_dir;
};

void add_estimate(CLI::App& app, EstimateArgs& a) {
  auto* sub = app.add_subcommand("estimate", "Estimate tau curves from trajectories or minibatches");
  sub->add_option("--input,-i", a.inputs, "Trajectory JSONL (or minibatch JSONL)")
      ->required()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  sub->add_option("--m", a.m, "History length")->capture_default_str();
  sub->add_option("--r", a.r, "Neighbour count")->capture_default_str();
  sub->add_option("--B", a.b, "Permutation replicates, 0 for no centering")->capture_default_str();
  sub->add_option("--K,--max-lag", a.k, "Maximum lag")->capture_default_str();
  sub->add_option("--seed", a.seed)->capture_default_str();
  sub->add_flag("--no-loo", a.no_loo, "Keep the query point among its neighbours");
  sub->add_flag("--per-minibatch", a.per_minibatch, "Inputs are minibatch logs; one curve per record");
  sub->add_option("--threads", a.threads, "Worker threads, 0 for all cores");
  sub->add_option("--out", a.out, "Aggregated curve CSV")->capture_default_str();
  sub->add_option("--out-dir", a.out_dir, "Directory for per-source curve CSVs");
}

int run_estimate(const EstimateArgs& a, std::ostream& out) {
  EstimatorConfig config;
  config.history = a.m;
  config.neighbors = a.r;
  config.permutations = a.b;
  config.max_lag = a.k;
  config.leave_one_out = !a.no_loo;
  config.seed = a.seed;
  config.threads = a.threads == 0 ? default_threads() : a.threads;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::vector<ObservationSequence> sources;
  for (const auto& path : a.inputs) {
    auto in = open_input(path);
    try {
      if (a.per_minibatch) {
        for (auto& rec : io::read_minibatches(in)) sources.push_back(std::move(rec.rows));
      } else {
        sources.push_back(io::read_trajectory(in, path));
      }
    } catch (const io::FormatError& e) {
      throw io::FormatError(e.line(), path + ": " + e.what());
    }
  }
  if (sources.empty()) throw io::FormatError(0, "no sources to estimate");

  std::vector<TauCurve> curves;
  curves.reserve(sources.size());
  for (const auto& seq : sources) curves.push_back(tau_curve(seq, config));

  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    for (std::size_t i = 0; i < curves.size(); ++i) {
      std::ostringstream name;
      name << "source_" << std::setw(4) << std::setfill('0') << i + 1 << ".csv";
      std::ofstream f(fs::path(a.out_dir) / name.str(), std::ios::binary);
      if (!f) throw UsageError("cannot write into '" + a.out_dir + "'");
      io::write_curve_csv(f, curves[i]);
    }
  }
  Output o(a.out, out);
  io::write_curve_csv(*o, aggregate_curves(curves));
  return ok;
}

// ---- aggregate ----

struct AggregateArgs {
  std::vector<std::string> inputs;
  std::string out = "-";
};

void add_aggregate(CLI::App& app, AggregateArgs& a) {
  auto* sub = app.add_subcommand("aggregate", "Mean and standard error over curve CSVs");
  sub->add_option("inputs", a.inputs, "Curve CSVs")
      ->required()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  sub->add_option("--out", a.out)->capture_default_str();
}

int run_aggregate(const AggregateArgs& a, std::ostream& out) {
  std::vector<std::vector<double>> curves;
  for (const auto& path : a.inputs) {
    auto in = open_input(path);
    try {
      curves.push_back(io::read_curve_csv(in).mean);
    } catch (const io::FormatError& e) {
      throw io::FormatError(e.line(), path + ": " + e.what());
    }
  }
  AggregatedCurve agg;
  try {
    agg = aggregate_values(curves);
  } catch (const std::invalid_argument& e) {
    throw io::FormatError(0, e.what());
  }
  Output o(a.out, out);
  io::write_curve_csv(*o, agg);
  return ok;
}

// ---- fit ----

struct FitArgs {
  std::string input;
  std::size_t cutoff = 0;
  std::string out = "-";
};

void add_fit(CLI::App& app, FitArgs& a) {
  auto* sub = app.add_subcommand("fit", "Fit c0 exp(-c1 k) to a curve CSV");
  sub->add_option("--input,-i", a.input)->required();
  sub->add_option("--cutoff", a.cutoff, "Ignore lags >= cutoff, 0 for none")->capture_default_str();
  sub->add_option("--out", a.out)->capture_default_str();
}

int run_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  auto in = open_input(a.input);
  const AggregatedCurve curve = io::read_curve_csv(in);
  DecayFit fit;
  try {
    fit = fit_exponential_decay(curve.mean, a.cutoff);
  } catch (const NoDecayDetected& e) {
    err << "fit: " << e.what() << '\n';
    return data_format;
  } catch (const std::invalid_argument& e) {
    err << "fit: " << e.what() << '\n';
    return data_format;
  }
  Output o(a.out, out);
  *o << io::fit_json(fit) << '\n';
  return ok;
}

// ---- effsize ----

struct EffsizeArgs {
  double c0 = 1.0;
  double c1 = 1.0;
  std::size_t n = 1000;
  double bound = 1.0;
  std::optional<double> sigma;
};

void add_effsize(CLI::App& app, EffsizeArgs& a) {
  auto* sub = app.add_subcommand("effsize", "Effective sample size for tau(k) = c0 exp(-c1 k)");
  sub->add_option("--c0", a.c0)->capture_default_str();
  sub->add_option("--c1", a.c1)->capture_default_str();
  sub->add_option("--n", a.n)->capture_default_str();
  sub->add_option("--bound", a.bound, "Amplitude B")->capture_default_str();
  sub->add_option("--sigma", a.sigma, "Variance proxy, defaults to B");
}

int run_effsize(const EffsizeArgs& a, std::ostream& out) {
  if (a.n < 1) throw UsageError("--n must be >= 1");
  const double lower = n_eff_lower_bound(a.c0, a.c1, a.bound, static_cast<double>(a.n));
  const double c0 = a.c0, c1 = a.c1;
  const std::size_t scan = n_eff_search(
      [c0, c1](std::size_t k) { return c0 * std::exp(-c1 * static_cast<double>(k)); }, a.n,
      a.bound, a.sigma.value_or(a.bound));
  nlohmann::json j = {{"n", a.n}, {"lower_bound", lower}, {"n_eff_search", scan}};
  out << j.dump() << '\n';
  return ok;
}

// ---- verify-batch ----

struct VerifyArgs {
  std::string input;
};

void add_verify(CLI::App& app, VerifyArgs& a) {
  auto* sub = app.add_subcommand("verify-batch", "Check order preservation of logged minibatches");
  sub->add_option("--input,-i", a.input)->required();
}

int run_verify(const VerifyArgs& a, std::ostream& out) {
  auto in = open_input(a.input);
  const auto records = io::read_minibatches(in);
  std::size_t failures = 0;
  for (const auto& rec : records) {
    const OrderReport report = verify_order_preserving(rec.batch.indices);
    const bool guaranteed = order_preserving(rec.batch.params.kind);
    if (guaranteed && !report.ok) ++failures;
    nlohmann::json j = {{"update", rec.update},
                        {"sampler", to_string(rec.batch.params.kind)},
                        {"guaranteed", guaranteed},
                        {"ok", report.ok},
                        {"min_gap", report.min_gap}};
    out << j.dump() << '\n';
  }
  nlohmann::json summary = {{"records", records.size()}, {"failures", failures}};
  out << summary.dump() << '\n';
  return failures == 0 ? ok : data_format;
}

// Replaces "--config FILE" with the file's key=value lines as "--key value"
// tokens placed right after the subcommand name. Values "true"/"false" become
// a bare flag or nothing.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::vector<std::string> extra;
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw InputError("--config needs a file");
      path = args[++i];
    } else if (args[i].starts_with("--config=")) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
      continue;
    }
    std::ifstream in(path);
    if (!in) throw InputError("cannot read config '" + path + "'");
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
      ++number;
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
      };
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw InputError(path + ":" + std::to_string(number) + ": expected key=value");
      std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (!key.starts_with("-")) key = "--" + key;
      if (value == "false") continue;
      extra.push_back(key);
      if (value != "true") extra.push_back(value);
    }
  }
  auto sub = std::find_if(rest.begin(), rest.end(),
                          [](const std::string& s) { return !s.starts_with("-"); });
  if (sub != rest.end()) ++sub;
  rest.insert(sub, extra.begin(), extra.end());
  return rest;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dependence estimation toolkit for sequential and replay data", "taumix"};
  app.require_subcommand(1);
  // Repeated options keep the last value, so command-line flags placed after
  // expanded config entries win.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  GenArgs gen;
  TrainArgs train;
  RolloutArgs rollout;
  EstimateArgs estimate;
  AggregateArgs aggregate;
  FitArgs fit;
  EffsizeArgs effsize;
  VerifyArgs verify;
  add_gen(app, gen);
  add_train(app, train);
  add_rollout(app, rollout);
  add_estimate(app, estimate);
  add_aggregate(app, aggregate);
  add_fit(app, fit);
  add_effsize(app, effsize);
  add_verify(app, verify);

  std::vector<std::string> rev;
  try {
    rev = expand_config(args);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  }
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "gen") return run_gen(gen, out);
    if (name == "train") return run_train(train, out, err);
    if (name == "rollout") return run_rollout(rollout, out);
    if (name == "estimate") return run_estimate(estimate, out);
    if (name == "aggregate") return run_aggregate(aggregate, out);
    if (name == "fit") return run_fit(fit, out, err);
    if (name == "effsize") return run_effsize(effsize, out);
    if (name == "verify-batch") return run_verify(verify, out);
    err << "error: unknown subcommand " << name << '\n';
    return usage;
  } catch (const io::FormatError& e) {
    err << "data error: " << e.what() << '\n';
    return data_format;
  } catch (const InputError& e) {
    err << "data error: " << e.what() << '\n';
    return data_format;
  } catch (const InfeasiblePlan& e) {
    err << "infeasible: " << e.what() << '\n';
    return infeasible;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  }
}

}  // namespace taumix::cli
