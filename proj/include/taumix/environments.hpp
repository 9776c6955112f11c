#pragma once

// Toy environments: a 4x4 slippery gridworld and classic cart-pole.

#include <array>
#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace taumix {

enum class EnvKind { gridworld, cartpole };

std::string to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string& name);

struct StepResult {
  std::vector<double> state;
  double reward = 0.0;
  bool done = false;       // terminal state reached
  bool truncated = false;  // episode step cap hit
};

/// Discrete states are one-hot, continuous states raw, and the action index
/// is appended as the last coordinate.
std::vector<double> encode_state_action(EnvKind kind, std::span<const double> state,
                                        std::size_t action);
std::size_t encoded_dim(EnvKind kind);

// ---- gridworld ----

namespace grid {

enum Action : std::size_t { left = 0, down = 1, right = 2, up = 3 };
inline constexpr std::size_t kSide = 4;
inline constexpr std::size_t kStates = kSide * kSide;
inline constexpr std::size_t kActions = 4;

/// S start, F frozen, H hole, G goal. Row 0 is the top row.
const std::array<std::string, kSide>& default_map();

struct Outcome {
  std::size_t next = 0;
  double reward = 0.0;
  bool done = false;
};

bool is_terminal(std::size_t cell);
/// Move without slipping; walls clamp.
std::size_t move(std::size_t cell, std::size_t action);
/// Outcome of applying `action` exactly.
Outcome resolve(std::size_t cell, std::size_t action);

}  // namespace grid

/// With probability slip_prob the action is swapped for one of its two
/// perpendicular actions, chosen uniformly.
grid::Outcome gridworld_step(std::size_t cell, std::size_t action, double slip_prob,
                             std::mt19937_64& rng);

// ---- cart-pole ----

struct CartPoleState {
  double x = 0.0;
  double x_dot = 0.0;
  double theta = 0.0;
  double theta_dot = 0.0;
};

namespace cartpole {
inline constexpr double kGravity = 9.8;
inline constexpr double kMassCart = 1.0;
inline constexpr double kMassPole = 0.1;
inline constexpr double kHalfLength = 0.5;
inline constexpr double kForce = 10.0;
inline constexpr double kDt = 0.02;
inline constexpr double kThetaLimit = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
inline constexpr double kXLimit = 2.4;
inline constexpr std::size_t kMaxSteps = 500;

bool out_of_bounds(const CartPoleState& s);
}  // namespace cartpole

struct CartPoleOutcome {
  CartPoleState next;
  double reward = 0.0;
  bool done = false;
};

/// One explicit Euler step. A state already out of bounds is returned
/// unchanged with reward 0 and done set. Throws on non-finite input.
CartPoleOutcome cartpole_step(const CartPoleState& s, std::size_t action);

// ---- episodic wrapper used by training and rollouts ----

class Environment {
 public:
  virtual ~Environment() = default;
  virtual EnvKind kind() const = 0;
  virtual std::size_t num_actions() const = 0;
  virtual double reward_bound() const = 0;
  virtual std::vector<double> reset(std::mt19937_64& rng) = 0;
  virtual StepResult step(std::size_t action, std::mt19937_64& rng) = 0;
};

class GridWorldEnv : public Environment {
 public:
  explicit GridWorldEnv(double slip_prob = 0.0, std::size_t max_steps = 100);
  EnvKind kind() const override { return EnvKind::gridworld; }
  std::size_t num_actions() const override { return grid::kActions; }
  double reward_bound() const override { return 1.0; }
  std::vector<double> reset(std::mt19937_64& rng) override;
  StepResult step(std::size_t action, std::mt19937_64& rng) override;

  double slip_prob() const { return slip_prob_; }

 private:
  double slip_prob_;
  std::size_t max_steps_;
  std::size_t cell_ = 0;
  std::size_t steps_ = 0;
};

class CartPoleEnv : public Environment {
 public:
  /// Reset draws each coordinate uniformly from [-reset_scale, reset_scale];
  /// a scale of 0 gives a fixed upright start.
  explicit CartPoleEnv(double reset_scale = 0.05);
  EnvKind kind() const override { return EnvKind::cartpole; }
  std::size_t num_actions() const override { return 2; }
  double reward_bound() const override { return 1.0; }
  std::vector<double> reset(std::mt19937_64& rng) override;
  StepResult step(std::size_t action, std::mt19937_64& rng) override;

 private:
  double reset_scale_;
  CartPoleState state_;
  std::size_t steps_ = 0;
};

std::unique_ptr<Environment> make_environment(EnvKind kind, double slip_prob = 0.0);

}  // namespace taumix
