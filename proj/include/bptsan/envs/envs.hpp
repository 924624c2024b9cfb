#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bptsan/errors.hpp"
#include "bptsan/random.hpp"

namespace bptsan::envs {

struct EnvSpec {
  std::string name;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;
  std::vector<double> action_low, action_high;
  std::vector<double> obs_low, obs_high;  // expected observation range
  std::size_t max_episode_steps = 1;
  double dt = 0.05;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool terminal = false;   // true end of the task (no bootstrap)
  bool truncated = false;  // step limit reached
  bool done() const { return terminal || truncated; }
};

/// Uniform environment contract. Instances are single-owner state machines:
/// (reset seed, action sequence) determines every observation and reward.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual StepResult step(std::span<const double> action) = 0;
  virtual std::vector<double> observation() const = 0;
  /// Internal state (including the step counter) as reals, for checkpoints.
  virtual std::vector<double> save_state() const = 0;
  virtual void load_state(std::span<const double> state) = 0;
  virtual std::unique_ptr<Environment> clone() const = 0;
  std::size_t steps() const { return steps_; }

 protected:
  /// Checks finiteness and clamps into the action box.
  std::vector<double> clamp_action(std::span<const double> action) const {
    const EnvSpec& s = spec();
    if (action.size() != s.action_dim) throw InputError(s.name + ": action has wrong dimension");
    std::vector<double> a(action.begin(), action.end());
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!std::isfinite(a[i])) throw InputError(s.name + ": non-finite action");
      a[i] = std::clamp(a[i], s.action_low[i], s.action_high[i]);
    }
    return a;
  }

  std::size_t steps_ = 0;
};

/// Angle wrapped into (-pi, pi].
inline double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return theta - two_pi * std::ceil((theta - std::numbers::pi) / two_pi);
}

struct PendulumState {
  double theta = 0.0;  // 0 is upright
  double theta_dot = 0.0;
};

struct PendulumParams {
  double gravity = 10.0;
  double mass = 1.0;
  double length = 1.0;
  double dt = 0.05;
  double max_speed = 8.0;
  double max_torque = 2.0;
};

/// Cost of being in `s` while applying torque u.
inline double pendulum_reward(const PendulumState& s, double u) {
  const double th = wrap_angle(s.theta);
  return -(th * th + 0.1 * s.theta_dot * s.theta_dot + 0.001 * u * u);
}

/// Explicit Euler step of theta'' = 3g/(2l) sin(theta) + 3/(m l^2) u, with the
/// angular speed clamped to [-max_speed, max_speed].
inline PendulumState pendulum_dynamics(const PendulumState& s, double u, const PendulumParams& p = {}) {
  const double accel = 3.0 * p.gravity / (2.0 * p.length) * std::sin(s.theta) + 3.0 / (p.mass * p.length * p.length) * u;
  PendulumState next;
  next.theta = s.theta + s.theta_dot * p.dt;
  next.theta_dot = std::clamp(s.theta_dot + accel * p.dt, -p.max_speed, p.max_speed);
  return next;
}

/// Torque-limited inverted pendulum; observation (cos theta, sin theta, theta_dot).
class Pendulum final : public Environment {
 public:
  Pendulum() {
    spec_.name = "pendulum";
    spec_.state_dim = 3;
    spec_.action_dim = 1;
    spec_.action_low = {-params_.max_torque};
    spec_.action_high = {params_.max_torque};
    spec_.obs_low = {-1.0, -1.0, -params_.max_speed};
    spec_.obs_high = {1.0, 1.0, params_.max_speed};
    spec_.max_episode_steps = 200;
    spec_.dt = params_.dt;
  }

  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> reset(std::uint64_t seed) override {
    Rng rng(seed);
    state_.theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
    state_.theta_dot = rng.uniform(-1.0, 1.0);
    steps_ = 0;
    return observation();
  }

  /// Places the pendulum in an explicit state (tests and scripted starts).
  void set_state(const PendulumState& s) {
    state_ = s;
    steps_ = 0;
  }
  const PendulumState& state() const { return state_; }

  StepResult step(std::span<const double> action) override {
    const double u = clamp_action(action)[0];
    StepResult r;
    r.reward = pendulum_reward(state_, u);
    state_ = pendulum_dynamics(state_, u, params_);
    ++steps_;
    r.truncated = steps_ >= spec_.max_episode_steps;
    r.observation = observation();
    return r;
  }

  std::vector<double> observation() const override {
    return {std::cos(state_.theta), std::sin(state_.theta), state_.theta_dot};
  }

  std::vector<double> save_state() const override {
    return {state_.theta, state_.theta_dot, static_cast<double>(steps_)};
  }

  void load_state(std::span<const double> s) override {
    if (s.size() != 3) throw CheckpointError("pendulum state must hold 3 values");
    state_ = {s[0], s[1]};
    steps_ = static_cast<std::size_t>(s[2]);
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<Pendulum>(*this); }

 private:
  EnvSpec spec_;
  PendulumParams params_;
  PendulumState state_;
};

struct ReacherState {
  double x = 0.0, y = 0.0, vx = 0.0, vy = 0.0, gx = 0.0, gy = 0.0;
};

inline constexpr double kReacherDt = 0.05;
inline constexpr double kReacherGoalRadius = 0.05;

/// Damped double integrator: v <- 0.9 v + dt * 10 a, p <- p + dt * v.
inline ReacherState reacher_dynamics(const ReacherState& s, double ax, double ay) {
  ReacherState n = s;
  n.vx = 0.9 * s.vx + kReacherDt * ax * 10.0;
  n.vy = 0.9 * s.vy + kReacherDt * ay * 10.0;
  n.x = s.x + kReacherDt * n.vx;
  n.y = s.y + kReacherDt * n.vy;
  return n;
}

inline double reacher_distance(const ReacherState& s) { return std::hypot(s.x - s.gx, s.y - s.gy); }

/// Point mass pushed towards a goal in [-1, 1]^2; observation is the full
/// state (x, y, vx, vy, gx, gy). Reward and termination use the post-step
/// position.
class PointReacher final : public Environment {
 public:
  PointReacher() {
    spec_.name = "reacher";
    spec_.state_dim = 6;
    spec_.action_dim = 2;
    spec_.action_low = {-1.0, -1.0};
    spec_.action_high = {1.0, 1.0};
    spec_.obs_low = {-1.5, -1.5, -3.0, -3.0, -1.0, -1.0};
    spec_.obs_high = {1.5, 1.5, 3.0, 3.0, 1.0, 1.0};
    spec_.max_episode_steps = 150;
    spec_.dt = kReacherDt;
  }

  const EnvSpec& spec() const override { return spec_; }

  std::vector<double> reset(std::uint64_t seed) override {
    Rng rng(seed);
    state_ = {};
    state_.gx = rng.uniform(-1.0, 1.0);
    state_.gy = rng.uniform(-1.0, 1.0);
    steps_ = 0;
    return observation();
  }

  void set_state(const ReacherState& s) {
    state_ = s;
    steps_ = 0;
  }
  const ReacherState& state() const { return state_; }

  StepResult step(std::span<const double> action) override {
    const std::vector<double> a = clamp_action(action);
    state_ = reacher_dynamics(state_, a[0], a[1]);
    ++steps_;
    const double dist = reacher_distance(state_);
    StepResult r;
    r.reward = -dist - 0.01 * (a[0] * a[0] + a[1] * a[1]);
    r.terminal = dist < kReacherGoalRadius;
    r.truncated = !r.terminal && steps_ >= spec_.max_episode_steps;
    r.observation = observation();
    return r;
  }

  std::vector<double> observation() const override {
    return {state_.x, state_.y, state_.vx, state_.vy, state_.gx, state_.gy};
  }

  std::vector<double> save_state() const override {
    return {state_.x, state_.y, state_.vx, state_.vy, state_.gx, state_.gy, static_cast<double>(steps_)};
  }

  void load_state(std::span<const double> s) override {
    if (s.size() != 7) throw CheckpointError("reacher state must hold 7 values");
    state_ = {s[0], s[1], s[2], s[3], s[4], s[5]};
    steps_ = static_cast<std::size_t>(s[6]);
  }

  std::unique_ptr<Environment> clone() const override { return std::make_unique<PointReacher>(*this); }

 private:
  EnvSpec spec_;
  ReacherState state_;
};

inline std::unique_ptr<Environment> make_env(std::string_view name) {
  if (name == "pendulum") return std::make_unique<Pendulum>();
  if (name == "reacher") return std::make_unique<PointReacher>();
  throw ConfigError("unknown environment '" + std::string(name) + "' (expected pendulum | reacher)");
}

}  // namespace bptsan::envs
