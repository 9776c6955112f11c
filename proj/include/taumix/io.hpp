#pragma once

// File formats: trajectory and minibatch JSONL, curve CSV, fit and policy JSON.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "taumix/dqn.hpp"
#include "taumix/mixing_math.hpp"
#include "taumix/sequence.hpp"
#include "taumix/tau_estimator.hpp"

namespace taumix::io {

/// Malformed input. `line` is 1-based; 0 when not tied to a line.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

// Trajectories: one {"t": int, "x": [reals]} per line, t = 1, 2, ...
void write_trajectory(std::ostream& out, const ObservationSequence& seq);
ObservationSequence read_trajectory(std::istream& in, std::string label = {});

// Minibatch logs: one {"update", "sampler": {"kind", "params"}, "indices", "rows"} per line.
std::string minibatch_line(const MinibatchRecord& record);
void write_minibatch(std::ostream& out, const MinibatchRecord& record);
std::vector<MinibatchRecord> read_minibatches(std::istream& in);

// Curves: header k,mean,se,n_replicates; se empty when n_replicates is 1.
void write_curve_csv(std::ostream& out, const AggregatedCurve& curve);
void write_curve_csv(std::ostream& out, const TauCurve& curve);
AggregatedCurve read_curve_csv(std::istream& in);

std::string fit_json(const DecayFit& fit);

void write_policy(std::ostream& out, EnvKind env, const QFunction& q);
struct Policy {
  EnvKind env = EnvKind::gridworld;
  QFunction q;
};
Policy read_policy(std::istream& in);

}  // namespace taumix::io
