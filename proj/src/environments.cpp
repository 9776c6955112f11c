#include "taumix/environments.hpp"

#include <cmath>
#include <stdexcept>

namespace taumix {

std::string to_string(EnvKind kind) {
  return kind == EnvKind::gridworld ? "gridworld" : "cartpole";
}

EnvKind env_kind_from_string(const std::string& name) {
  if (name == "gridworld" || name == "frozenlake") return EnvKind::gridworld;
  if (name == "cartpole") return EnvKind::cartpole;
  throw std::invalid_argument("unknown environment '" + name + "'");
}

std::size_t encoded_dim(EnvKind kind) {
  return kind == EnvKind::gridworld ? grid::kStates + 1 : 5;
}

std::vector<double> encode_state_action(EnvKind kind, std::span<const double> state,
                                        std::size_t action) {
  std::vector<double> out;
  if (kind == EnvKind::gridworld) {
    if (action >= grid::kActions) throw std::invalid_argument("gridworld: action out of range");
    if (state.size() != 1 || !(state[0] >= 0.0) || state[0] >= grid::kStates)
      throw std::invalid_argument("gridworld: invalid state");
    out.assign(grid::kStates + 1, 0.0);
    out[static_cast<std::size_t>(state[0])] = 1.0;
  } else {
    if (action >= 2) throw std::invalid_argument("cartpole: action out of range");
    if (state.size() != 4) throw std::invalid_argument("cartpole: state must have 4 entries");
    out.assign(state.begin(), state.end());
    out.push_back(0.0);
  }
  out.back() = static_cast<double>(action);
  return out;
}

namespace grid {

const std::array<std::string, kSide>& default_map() {
  static const std::array<std::string, kSide> map{"SFFF", "FHFH", "FFFH", "HFFG"};
  return map;
}

namespace {
char tile(std::size_t cell) { return default_map()[cell / kSide][cell % kSide]; }
}  // namespace

bool is_terminal(std::size_t cell) {
  const char c = tile(cell);
  return c == 'H' || c == 'G';
}

std::size_t move(std::size_t cell, std::size_t action) {
  std::size_t row = cell / kSide;
  std::size_t col = cell % kSide;
  switch (action) {
    case left: if (col > 0) --col; break;
    case down: if (row + 1 < kSide) ++row; break;
    case right: if (col + 1 < kSide) ++col; break;
    case up: if (row > 0) --row; break;
    default: throw std::invalid_argument("gridworld: action out of range");
  }
  return row * kSide + col;
}

Outcome resolve(std::size_t cell, std::size_t action) {
  Outcome o;
  o.next = move(cell, action);
  o.reward = tile(o.next) == 'G' ? 1.0 : 0.0;
  o.done = is_terminal(o.next);
  return o;
}

}  // namespace grid

grid::Outcome gridworld_step(std::size_t cell, std::size_t action, double slip_prob,
                             std::mt19937_64& rng) {
  if (cell >= grid::kStates) throw std::invalid_argument("gridworld: cell out of range");
  if (action >= grid::kActions) throw std::invalid_argument("gridworld: action out of range");
  if (slip_prob > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < slip_prob) {
      // Perpendicular actions are the neighbours of `action` on the cycle
      // left, down, right, up.
      const bool clockwise = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
      action = (action + (clockwise ? 1 : 3)) % grid::kActions;
    }
  }
  return grid::resolve(cell, action);
}

namespace cartpole {
bool out_of_bounds(const CartPoleState& s) {
  return s.x < -kXLimit || s.x > kXLimit || s.theta < -kThetaLimit || s.theta > kThetaLimit;
}
}  // namespace cartpole

CartPoleOutcome cartpole_step(const CartPoleState& s, std::size_t action) {
  using namespace cartpole;
  if (!std::isfinite(s.x) || !std::isfinite(s.x_dot) || !std::isfinite(s.theta) ||
      !std::isfinite(s.theta_dot))
    throw std::invalid_argument("cartpole: non-finite state");
  if (action >= 2) throw std::invalid_argument("cartpole: action out of range");
  if (out_of_bounds(s)) return {s, 0.0, true};

  const double total_mass = kMassCart + kMassPole;
  const double pole_ml = kMassPole * kHalfLength;
  const double force = action == 1 ? kForce : -kForce;
  const double cos_t = std::cos(s.theta);
  const double sin_t = std::sin(s.theta);
  const double temp = (force + pole_ml * s.theta_dot * s.theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) /
      (kHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_ml * theta_acc * cos_t / total_mass;

  CartPoleOutcome out;
  out.next.x = s.x + kDt * s.x_dot;
  out.next.x_dot = s.x_dot + kDt * x_acc;
  out.next.theta = s.theta + kDt * s.theta_dot;
  out.next.theta_dot = s.theta_dot + kDt * theta_acc;
  out.reward = 1.0;
  out.done = out_of_bounds(out.next);
  return out;
}

GridWorldEnv::GridWorldEnv(double slip_prob, std::size_t max_steps)
    : slip_prob_(slip_prob), max_steps_(max_steps) {
  if (!(slip_prob >= 0.0 && slip_prob <= 1.0))
    throw std::invalid_argument("gridworld: slip probability must lie in [0, 1]");
}

std::vector<double> GridWorldEnv::reset(std::mt19937_64&) {
  cell_ = 0;
  steps_ = 0;
  return {0.0};
}

StepResult GridWorldEnv::step(std::size_t action, std::mt19937_64& rng) {
  const grid::Outcome o = gridworld_step(cell_, action, slip_prob_, rng);
  cell_ = o.next;
  ++steps_;
  StepResult r;
  r.state = {static_cast<double>(cell_)};
  r.reward = o.reward;
  r.done = o.done;
  r.truncated = !o.done && steps_ >= max_steps_;
  return r;
}

CartPoleEnv::CartPoleEnv(double reset_scale) : reset_scale_(reset_scale) {}

namespace {
std::vector<double> as_vector(const CartPoleState& s) {
  return {s.x, s.x_dot, s.theta, s.theta_dot};
}
}  // namespace

std::vector<double> CartPoleEnv::reset(std::mt19937_64& rng) {
  if (reset_scale_ > 0.0) {
    std::uniform_real_distribution<double> u(-reset_scale_, reset_scale_);
    state_ = {u(rng), u(rng), u(rng), u(rng)};
  } else {
    state_ = {};
  }
  steps_ = 0;
  return as_vector(state_);
}

StepResult CartPoleEnv::step(std::size_t action, std::mt19937_64&) {
  const CartPoleOutcome o = cartpole_step(state_, action);
  state_ = o.next;
  ++steps_;
  StepResult r;
  r.state = as_vector(state_);
  r.reward = o.reward;
  r.done = o.done;
  r.truncated = !o.done && steps_ >= cartpole::kMaxSteps;
  return r;
}

std::unique_ptr<Environment> make_environment(EnvKind kind, double slip_prob) {
  if (kind == EnvKind::gridworld) return std::make_unique<GridWorldEnv>(slip_prob);
  return std::make_unique<CartPoleEnv>();
}

}  // namespace taumix
