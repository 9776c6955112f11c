#include "taumix/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace taumix::io {

using nlohmann::json;

FormatError::FormatError(std::size_t line, const std::string& what)
    : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
      line_(line) {}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

json parse_line(const std::string& text, std::size_t line) {
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw FormatError(line, "expected a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw FormatError(line, std::string("invalid JSON: ") + e.what());
  }
}

const json& field(const json& obj, const char* name, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end()) throw FormatError(line, std::string("missing field '") + name + "'");
  return *it;
}

std::size_t positive_integer(const json& v, const char* name, std::size_t line) {
  if (!v.is_number_integer() || v.get<long long>() < 1)
    throw FormatError(line, std::string("'") + name + "' must be an integer >= 1");
  return v.get<std::size_t>();
}

std::vector<double> real_array(const json& v, const char* name, std::size_t line) {
  if (!v.is_array() || v.empty())
    throw FormatError(line, std::string("'") + name + "' must be a nonempty array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) throw FormatError(line, std::string("'") + name + "' holds a non-number");
    const double d = e.get<double>();
    if (!std::isfinite(d)) throw FormatError(line, std::string("'") + name + "' holds a non-finite value");
    out.push_back(d);
  }
  return out;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

void write_trajectory(std::ostream& out, const ObservationSequence& seq) {
  for (std::size_t t = 0; t < seq.length(); ++t) {
    out << "{\"t\":" << t + 1 << ",\"x\":[";
    const auto row = seq.row(t);
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << "]}\n";
  }
}

ObservationSequence read_trajectory(std::istream& in, std::string label) {
  ObservationSequence seq;
  seq.set_label(std::move(label));
  std::string text;
  std::size_t line = 0;
  std::size_t last_t = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    const json j = parse_line(text, line);
    const std::size_t t = positive_integer(field(j, "t", line), "t", line);
    if (last_t == 0 ? t != 1 : t <= last_t)
      throw FormatError(line, "'t' must start at 1 and increase strictly");
    last_t = t;
    const auto x = real_array(field(j, "x", line), "x", line);
    if (!seq.empty() && x.size() != seq.dim())
      throw FormatError(line, "row length " + std::to_string(x.size()) + " differs from " +
                                  std::to_string(seq.dim()));
    seq.push_back(x);
  }
  if (seq.empty()) throw FormatError(0, "trajectory has no rows");
  return seq;
}

std::string minibatch_line(const MinibatchRecord& record) {
  std::ostringstream out;
  const SamplerParams& p = record.batch.params;
  out << "{\"update\":" << record.update << ",\"sampler\":{\"kind\":\"" << to_string(p.kind)
      << "\",\"params\":{\"block\":" << p.block << ",\"gap\":" << p.gap << ",\"start\":" << p.start
      << "}},\"indices\":[";
  for (std::size_t i = 0; i < record.batch.indices.size(); ++i)
    out << (i ? "," : "") << record.batch.indices[i];
  out << "],\"rows\":[";
  for (std::size_t t = 0; t < record.rows.length(); ++t) {
    out << (t ? "," : "") << '[';
    const auto row = record.rows.row(t);
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << ']';
  }
  out << "]}";
  return out.str();
}

void write_minibatch(std::ostream& out, const MinibatchRecord& record) {
  out << minibatch_line(record) << '\n';
}

std::vector<MinibatchRecord> read_minibatches(std::istream& in) {
  std::vector<MinibatchRecord> records;
  std::string text;
  std::size_t line = 0;
  std::size_t dim = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    const json j = parse_line(text, line);
    MinibatchRecord rec;
    rec.update = positive_integer(field(j, "update", line), "update", line);

    const json& sampler = field(j, "sampler", line);
    if (!sampler.is_object()) throw FormatError(line, "'sampler' must be an object");
    const json& kind = field(sampler, "kind", line);
    if (!kind.is_string()) throw FormatError(line, "'sampler.kind' must be a string");
    try {
      rec.batch.params.kind = sampler_kind_from_string(kind.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw FormatError(line, e.what());
    }
    if (auto it = sampler.find("params"); it != sampler.end()) {
      if (!it->is_object()) throw FormatError(line, "'sampler.params' must be an object");
      auto read_count = [&](const char* name, std::size_t& slot) {
        if (auto f = it->find(name); f != it->end()) {
          if (!f->is_number_integer() || f->get<long long>() < 0)
            throw FormatError(line, std::string("'sampler.params.") + name +
                                        "' must be a nonnegative integer");
          slot = f->get<std::size_t>();
        }
      };
      read_count("block", rec.batch.params.block);
      read_count("gap", rec.batch.params.gap);
      read_count("start", rec.batch.params.start);
    }

    const json& indices = field(j, "indices", line);
    if (!indices.is_array() || indices.empty())
      throw FormatError(line, "'indices' must be a nonempty array");
    for (const auto& u : indices) rec.batch.indices.push_back(positive_integer(u, "indices", line));

    const json& rows = field(j, "rows", line);
    if (!rows.is_array()) throw FormatError(line, "'rows' must be an array");
    if (rows.size() != rec.batch.indices.size())
      throw FormatError(line, "'rows' and 'indices' differ in length");
    for (const auto& r : rows) {
      const auto x = real_array(r, "rows", line);
      if (dim == 0) dim = x.size();
      if (x.size() != dim) throw FormatError(line, "row length differs from earlier rows");
      rec.rows.push_back(x);
    }
    rec.rows.set_label("minibatch " + std::to_string(rec.update));
    records.push_back(std::move(rec));
  }
  return records;
}

void write_curve_csv(std::ostream& out, const AggregatedCurve& curve) {
  out << "k,mean,se,n_replicates\n";
  for (std::size_t k = 1; k <= curve.max_lag(); ++k) {
    out << k << ',' << format_double(curve.mean[k - 1]) << ',';
    if (curve.standard_error[k - 1]) out << format_double(*curve.standard_error[k - 1]);
    out << ',' << curve.replicates << '\n';
  }
}

void write_curve_csv(std::ostream& out, const TauCurve& curve) {
  const std::vector<double> one[] = {curve.values};
  write_curve_csv(out, aggregate_values(one));
}

namespace {

double parse_number(const std::string& s, std::size_t line, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw FormatError(line, std::string("bad ") + what + " '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(text);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!text.empty() && text.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

AggregatedCurve read_curve_csv(std::istream& in) {
  AggregatedCurve curve;
  std::string text;
  std::size_t line = 0;
  bool header = false;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (blank(text)) continue;
    if (!header) {
      if (text != "k,mean,se,n_replicates")
        throw FormatError(line, "expected header 'k,mean,se,n_replicates'");
      header = true;
      continue;
    }
    const auto cells = split_csv(text);
    if (cells.size() != 4) throw FormatError(line, "expected 4 columns");
    const double k = parse_number(cells[0], line, "lag");
    if (k != static_cast<double>(curve.mean.size() + 1))
      throw FormatError(line, "lags must run 1, 2, ... without gaps");
    const double mean = parse_number(cells[1], line, "mean");
    if (mean < 0.0) throw FormatError(line, "negative mean");
    std::optional<double> se;
    if (!cells[2].empty()) se = parse_number(cells[2], line, "standard error");
    const double reps = parse_number(cells[3], line, "replicate count");
    if (reps < 1 || reps != std::floor(reps)) throw FormatError(line, "bad replicate count");
    if (curve.mean.empty()) {
      curve.replicates = static_cast<std::size_t>(reps);
    } else if (curve.replicates != static_cast<std::size_t>(reps)) {
      throw FormatError(line, "replicate count changes between rows");
    }
    curve.mean.push_back(mean);
    curve.standard_error.push_back(se);
  }
  if (!header) throw FormatError(0, "empty curve file");
  if (curve.mean.empty()) throw FormatError(0, "curve has no rows");
  return curve;
}

std::string fit_json(const DecayFit& fit) {
  json j = {{"c0_hat", fit.c0},
            {"c1_hat", fit.c1},
            {"rmse", fit.rmse},
            {"n_points_used", fit.n_points_used}};
  return j.dump();
}

void write_policy(std::ostream& out, EnvKind env, const QFunction& q) {
  json j = {{"env", to_string(env)},
            {"kind", q.kind() == QFunction::Kind::tabular ? "tabular" : "linear"},
            {"rows", q.rows()},
            {"actions", q.num_actions()},
            {"params", q.parameters()}};
  out << j.dump() << '\n';
}

Policy read_policy(std::istream& in) {
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw FormatError(0, std::string("invalid policy JSON: ") + e.what());
  }
  try {
    Policy p;
    p.env = env_kind_from_string(j.at("env").get<std::string>());
    const std::string kind = j.at("kind").get<std::string>();
    if (kind != "tabular" && kind != "linear") throw FormatError(0, "unknown policy kind '" + kind + "'");
    p.q = QFunction::from_parameters(
        kind == "tabular" ? QFunction::Kind::tabular : QFunction::Kind::linear,
        j.at("rows").get<std::size_t>(), j.at("actions").get<std::size_t>(),
        j.at("params").get<std::vector<double>>());
    const QFunction expected = QFunction::for_env(p.env);
    if (expected.kind() != p.q.kind() || expected.rows() != p.q.rows() ||
        expected.num_actions() != p.q.num_actions())
      throw FormatError(0, "policy shape does not match environment " + to_string(p.env));
    return p;
  } catch (const json::exception& e) {
    throw FormatError(0, std::string("bad policy file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(0, std::string("bad policy file: ") + e.what());
  }
}

}  // namespace taumix::io
