#include "taumix/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace taumix {

QFunction QFunction::tabular(std::size_t states, std::size_t actions, double init) {
  if (states == 0 || actions == 0) throw std::invalid_argument("QFunction: empty table");
  QFunction q;
  q.kind_ = Kind::tabular;
  q.rows_ = states;
  q.actions_ = actions;
  q.params_.assign(states * actions, init);
  return q;
}

QFunction QFunction::linear(std::size_t state_dim, std::size_t actions) {
  if (actions == 0) throw std::invalid_argument("QFunction: no actions");
  QFunction q;
  q.kind_ = Kind::linear;
  q.rows_ = state_dim + 1;
  q.actions_ = actions;
  q.params_.assign(q.rows_ * actions, 0.0);
  return q;
}

QFunction QFunction::for_env(EnvKind kind) {
  if (kind == EnvKind::gridworld) return tabular(grid::kStates, grid::kActions);
  return linear(4, 2);
}

QFunction QFunction::from_parameters(Kind kind, std::size_t rows, std::size_t actions,
                                     std::vector<double> params) {
  if (rows == 0 || actions == 0 || params.size() != rows * actions)
    throw std::invalid_argument("QFunction: parameter count does not match the shape");
  QFunction q;
  q.kind_ = kind;
  q.rows_ = rows;
  q.actions_ = actions;
  q.params_ = std::move(params);
  return q;
}

std::size_t QFunction::cell(std::span<const double> state) const {
  if (state.size() != 1 || !(state[0] >= 0.0) || state[0] >= static_cast<double>(rows_))
    throw std::invalid_argument("QFunction: tabular state out of range");
  return static_cast<std::size_t>(state[0]);
}

double QFunction::value(std::span<const double> state, std::size_t action) const {
  if (action >= actions_) throw std::invalid_argument("QFunction: action out of range");
  if (kind_ == Kind::tabular) return params_[cell(state) * actions_ + action];
  if (state.size() + 1 != rows_) throw std::invalid_argument("QFunction: feature size mismatch");
  double v = params_[action];
  for (std::size_t f = 0; f < state.size(); ++f) v += state[f] * params_[(f + 1) * actions_ + action];
  return v;
}

std::vector<double> QFunction::values(std::span<const double> state) const {
  std::vector<double> out(actions_);
  for (std::size_t a = 0; a < actions_; ++a) out[a] = value(state, a);
  return out;
}

double QFunction::max_value(std::span<const double> state) const {
  const auto v = values(state);
  return *std::max_element(v.begin(), v.end());
}

std::size_t QFunction::greedy(std::span<const double> state) const {
  const auto v = values(state);
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void QFunction::sgd_step(std::span<const Transition> batch, std::span<const double> targets,
                         double lr) {
  if (batch.size() != targets.size())
    throw std::invalid_argument("sgd_step: batch and targets differ in length");
  if (batch.empty()) return;
  if (kind_ == Kind::tabular) {
    std::map<std::size_t, std::pair<double, std::size_t>> residuals;
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const std::size_t slot = cell(batch[j].state) * actions_ + batch[j].action;
      auto& [sum, count] = residuals[slot];
      sum += targets[j] - params_[slot];
      ++count;
    }
    for (const auto& [slot, acc] : residuals)
      params_[slot] += lr * acc.first / static_cast<double>(acc.second);
    return;
  }
  std::vector<double> grad(params_.size(), 0.0);
  const double scale = 2.0 / static_cast<double>(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto& s = batch[j].state;
    const std::size_t a = batch[j].action;
    const double err = targets[j] - value(s, a);
    grad[a] -= scale * err;
    for (std::size_t f = 0; f < s.size(); ++f) grad[(f + 1) * actions_ + a] -= scale * err * s[f];
  }
  for (std::size_t p = 0; p < params_.size(); ++p) params_[p] -= lr * grad[p];
}

void QFunction::blend_from(const QFunction& online, double tau) {
  if (online.kind_ != kind_ || online.params_.size() != params_.size())
    throw std::invalid_argument("blend_from: shape mismatch");
  if (tau == 1.0) {
    params_ = online.params_;
    return;
  }
  for (std::size_t p = 0; p < params_.size(); ++p)
    params_[p] = tau * online.params_[p] + (1.0 - tau) * params_[p];
}

void TrainConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (buffer_capacity < 1) throw std::invalid_argument("buffer capacity must be >= 1");
  if (minibatch_size < 1) throw std::invalid_argument("minibatch size must be >= 1");
  if (!(eps_min >= 0.0 && eps_min <= 1.0 && eps_initial >= eps_min && eps_initial <= 1.0))
    throw std::invalid_argument("need 0 <= eps_min <= eps_initial <= 1");
  if (!(exploration_fraction >= 0.0 && exploration_fraction <= 1.0))
    throw std::invalid_argument("exploration fraction must lie in [0, 1]");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(tau_target > 0.0 && tau_target <= 1.0))
    throw std::invalid_argument("tau_target must lie in (0, 1]");
  if (target_period < 1 || update_frequency < 1)
    throw std::invalid_argument("target period and update frequency must be >= 1");
  if (start_time > buffer_capacity)
    throw std::invalid_argument("start time exceeds the buffer capacity");
  if (!(slip_prob >= 0.0 && slip_prob <= 1.0))
    throw std::invalid_argument("slip probability must lie in [0, 1]");
  if (sampler.kind == SamplerKind::uniform_without_replacement && minibatch_size > buffer_capacity)
    throw InfeasiblePlan("minibatch size exceeds the buffer capacity");
  if (sampler.kind == SamplerKind::contiguous_blocks ||
      sampler.kind == SamplerKind::contiguous_blocks_wraparound) {
    try {
      validate_block_shape(minibatch_size, sampler.block, sampler.gap);
    } catch (const std::invalid_argument& e) {
      throw InfeasiblePlan(e.what());
    }
    if (sampler.kind == SamplerKind::contiguous_blocks &&
        max_block_start(buffer_capacity, minibatch_size, sampler.block, sampler.gap) == 0)
      throw InfeasiblePlan("block layout does not fit in a full buffer");
  }
}

TrainConfig preset(const std::string& name) {
  TrainConfig c;
  std::string base = name;
  bool literal = false;
  if (base.ends_with("-literal")) {
    literal = true;
    base.resize(base.size() - 8);
  }
  // Shared across environments.
  c.minibatch_size = 128;
  c.gamma = 0.99;
  c.eps_min = 0.05;
  c.tau_target = 1.0;
  c.start_time = 1000;
  c.num_updates = 1;
  if (base == "frozenlake" || base == "gridworld") {
    c.buffer_capacity = 50000;
    c.max_episodes = 5000;
    c.eps_initial = 0.999;
    c.exploration_fraction = 0.3;
    c.update_frequency = 128;
    c.target_period = 1000;
    c.learning_rate = 0.5;  // tabular mixing weight
  } else if (base == "cartpole") {
    c.buffer_capacity = 100000;
    c.max_episodes = 1000;
    c.eps_initial = 0.99;
    c.exploration_fraction = 0.2;
    c.update_frequency = 256;
    c.target_period = 10;
    c.learning_rate = 1e-3;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  c.sampler = literal ? SamplerParams{SamplerKind::contiguous_blocks, 2, 42, 0}
                      : SamplerParams{SamplerKind::contiguous_blocks, 42, 2, 0};
  return c;
}

EnvKind preset_env(const std::string& name) {
  if (name.starts_with("cartpole")) return EnvKind::cartpole;
  if (name.starts_with("frozenlake") || name.starts_with("gridworld")) return EnvKind::gridworld;
  throw std::invalid_argument("unknown preset '" + name + "'");
}

double epsilon_at(const TrainConfig& config, std::size_t episode) {
  const double horizon = config.exploration_fraction * static_cast<double>(config.max_episodes);
  if (horizon <= 0.0) return config.eps_min;
  const double progress = static_cast<double>(episode) / horizon;
  if (progress >= 1.0) return config.eps_min;
  return config.eps_initial + progress * (config.eps_min - config.eps_initial);
}

namespace {

std::vector<double> encode(EnvKind kind, const Transition& t) {
  return encode_state_action(kind, t.state, t.action);
}

}  // namespace

TrainResult dqn_train(Environment& env, const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  const EnvKind kind = env.kind();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> random_action(0, env.num_actions() - 1);

  TrainResult result;
  result.q = QFunction::for_env(kind);
  result.target = result.q;
  ReplayBuffer buffer(config.buffer_capacity);
  const TransitionEncoder encoder = [kind](const Transition& t) { return encode(kind, t); };

  std::vector<double> targets;
  std::size_t logged_count = 0;
  for (std::size_t episode = 0; episode < config.max_episodes; ++episode) {
    const double eps = epsilon_at(config, episode);
    std::vector<double> state = env.reset(rng);
    double episode_return = 0.0;
    while (true) {
      const std::size_t action =
          unit(rng) < eps ? random_action(rng) : result.q.greedy(state);
      StepResult step = env.step(action, rng);
      if (options.record_trajectory)
        result.trajectory.push_back(encode_state_action(kind, state, action));
      episode_return += step.reward;
      buffer.push({state, action, step.reward, step.state, step.done});
      ++result.env_steps;

      if (buffer.size() >= config.start_time &&
          result.env_steps % config.update_frequency == 0) {
        for (std::size_t u = 0; u < config.num_updates; ++u) {
          IndexBatch batch;
          try {
            batch = draw_batch(config.sampler, buffer.size(), config.minibatch_size, rng);
          } catch (const InfeasiblePlan&) {
            ++result.skipped_updates;
            continue;
          }
          GatheredBatch gathered = gather_minibatch(buffer, batch, encoder);
          ++result.updates;
          if (options.sink && options.log_every > 0 && result.updates % options.log_every == 0) {
            options.sink({++logged_count, batch, gathered.rows});
          }
          targets.resize(gathered.transitions.size());
          for (std::size_t j = 0; j < targets.size(); ++j) {
            const Transition& t = gathered.transitions[j];
            targets[j] = t.done ? t.reward : t.reward + config.gamma * result.target.max_value(t.next_state);
          }
          result.q.sgd_step(gathered.transitions, targets, config.learning_rate);
        }
      }
      if (result.env_steps % config.target_period == 0) {
        result.target.blend_from(result.q, config.tau_target);
        ++result.target_syncs;
        if (options.on_target_update) options.on_target_update(result.q, result.target);
      }
      if (step.done || step.truncated) break;
      state = std::move(step.state);
    }
    result.episode_returns.push_back(episode_return);
  }
  return result;
}

ObservationSequence greedy_rollout(Environment& env, const QFunction& q, std::size_t t_max,
                                   std::uint64_t seed, RolloutMode mode) {
  std::mt19937_64 rng(seed);
  ObservationSequence out;
  out.set_label("rollout");
  if (t_max == 0) return out;
  std::vector<double> state = env.reset(rng);
  while (out.length() < t_max) {
    const std::size_t action = q.greedy(state);
    out.push_back(encode_state_action(env.kind(), state, action));
    StepResult step = env.step(action, rng);
    if (step.done || step.truncated) {
      if (mode == RolloutMode::truncate) break;
      state = env.reset(rng);
    } else {
      state = std::move(step.state);
    }
  }
  return out;
}

Evaluation evaluate_greedy(Environment& env, const QFunction& q, std::size_t episodes,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Evaluation ev;
  if (episodes == 0) return ev;
  std::size_t successes = 0;
  double total = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    std::vector<double> state = env.reset(rng);
    while (true) {
      StepResult step = env.step(q.greedy(state), rng);
      total += step.reward;
      if (step.done || step.truncated) {
        const bool success = env.kind() == EnvKind::gridworld ? step.done && step.reward > 0.0
                                                              : step.truncated;
        if (success) ++successes;
        break;
      }
      state = std::move(step.state);
    }
  }
  ev.success_rate = static_cast<double>(successes) / static_cast<double>(episodes);
  ev.mean_return = total / static_cast<double>(episodes);
  return ev;
}

}  // namespace taumix
