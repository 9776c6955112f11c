#pragma once

// Algorithm-1 style DQN loop with tabular or linear Q.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "taumix/environments.hpp"
#include "taumix/samplers.hpp"
#include "taumix/sequence.hpp"

namespace taumix {

class QFunction {
 public:
  enum class Kind { tabular, linear };

  QFunction() = default;
  static QFunction tabular(std::size_t states, std::size_t actions, double init = 0.0);
  /// Features are (1, s_1, ..., s_F); one weight vector per action.
  static QFunction linear(std::size_t state_dim, std::size_t actions);
  static QFunction for_env(EnvKind kind);
  static QFunction from_parameters(Kind kind, std::size_t rows, std::size_t actions,
                                   std::vector<double> params);

  Kind kind() const { return kind_; }
  std::size_t num_actions() const { return actions_; }
  /// States for tabular, features for linear.
  std::size_t rows() const { return rows_; }

  double value(std::span<const double> state, std::size_t action) const;
  std::vector<double> values(std::span<const double> state) const;
  double max_value(std::span<const double> state) const;
  /// Lowest index among maximisers.
  std::size_t greedy(std::span<const double> state) const;

  /// One step on L = mean_j (y_j - Q(s_j, a_j))^2.
  ///
  /// Linear: plain gradient descent with step `lr`. Tabular: every visited
  /// cell moves a fraction `lr` towards the mean of its targets, i.e. the
  /// gradient step rescaled per cell so that `lr` in (0, 1] is a convex
  /// mixing weight independent of the batch size.
  void sgd_step(std::span<const Transition> batch, std::span<const double> targets, double lr);

  /// theta <- tau * online + (1 - tau) * theta.
  void blend_from(const QFunction& online, double tau);

  const std::vector<double>& parameters() const { return params_; }

  friend bool operator==(const QFunction&, const QFunction&) = default;

 private:
  std::size_t cell(std::span<const double> state) const;

  Kind kind_ = Kind::tabular;
  std::size_t rows_ = 0;
  std::size_t actions_ = 0;
  std::vector<double> params_;  // row-major [row][action]
};

struct TrainConfig {
  double gamma = 0.99;
  std::size_t buffer_capacity = 50000;
  std::size_t max_episodes = 5000;
  std::size_t minibatch_size = 128;
  double eps_initial = 0.999;
  double eps_min = 0.05;
  double exploration_fraction = 0.3;
  double learning_rate = 0.5;
  double tau_target = 1.0;
  std::size_t target_period = 1000;   // environment steps
  std::size_t start_time = 1000;      // stored transitions before training
  std::size_t update_frequency = 128; // environment steps
  std::size_t num_updates = 1;        // gradient steps per phase
  SamplerParams sampler{SamplerKind::contiguous_blocks, 42, 2, 0};
  std::uint64_t seed = 0;
  double slip_prob = 0.0;             // gridworld only

  /// std::invalid_argument for bad ranges; InfeasiblePlan when the sampler
  /// can never produce a batch for these sizes.
  void validate() const;
};

/// Named hyperparameter sets: "frozenlake" and "cartpole". The block
/// sampler defaults to b = 42, a = 2; the "-literal" suffix swaps them
/// (b = 2, a = 42), which plan_blocks rejects.
TrainConfig preset(const std::string& name);
EnvKind preset_env(const std::string& name);

/// Linear decay by episode progress: eps_initial at episode 0, eps_min from
/// exploration_fraction * max_episodes on.
double epsilon_at(const TrainConfig& config, std::size_t episode);

struct MinibatchRecord {
  std::size_t update = 0;  // 1-based
  IndexBatch batch;
  ObservationSequence rows;  // encoded state-action rows, batch order
};

using MinibatchSink = std::function<void(const MinibatchRecord&)>;

struct TrainResult {
  QFunction q;
  QFunction target;
  std::vector<double> episode_returns;
  std::size_t env_steps = 0;
  std::size_t updates = 0;          // gradient steps taken
  std::size_t skipped_updates = 0;  // sampler infeasible for the buffer
  std::size_t target_syncs = 0;
  ObservationSequence trajectory;   // encoded behaviour rows, in time order
};

struct TrainOptions {
  MinibatchSink sink;          // receives logged minibatches
  std::size_t log_every = 1;   // log every n-th update; 0 disables
  bool record_trajectory = false;
  // Called after each target update; lets tests check the sync.
  std::function<void(const QFunction& online, const QFunction& target)> on_target_update;
};

TrainResult dqn_train(Environment& env, const TrainConfig& config,
                      const TrainOptions& options = {});

enum class RolloutMode { concatenate, truncate };

/// Greedy encoded state-action rows. Concatenate restarts the environment
/// after each episode until t_max rows exist; truncate stops at the first
/// episode end.
ObservationSequence greedy_rollout(Environment& env, const QFunction& q, std::size_t t_max,
                                   std::uint64_t seed,
                                   RolloutMode mode = RolloutMode::concatenate);

struct Evaluation {
  // Gridworld: goal reached. Cart-pole: survived to the step cap.
  double success_rate = 0.0;
  double mean_return = 0.0;
};

Evaluation evaluate_greedy(Environment& env, const QFunction& q, std::size_t episodes,
                           std::uint64_t seed);

}  // namespace taumix
