#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "bptsan/envs/envs.hpp"
#include "bptsan/random.hpp"
#include "bptsan/rl/components.hpp"

namespace bptsan::rl {

using Policy = std::function<std::vector<double>(std::span<const double> obs)>;

/// Steps one environment, appending transitions to a buffer. Episodes are
/// reset with seeds derived from `episode_seed` and a running episode index.
/// Time-limit truncation is stored as done = false (the task itself did not
/// end), true termination as done = true.
class Rollout {
 public:
  Rollout(envs::Environment& env, std::uint64_t episode_seed) : env_(env), episode_seed_(episode_seed) {}

  void begin() {
    obs_ = env_.reset(derive_seed(episode_seed_, Stream::env, episode_));
    episode_return_ = 0.0;
  }

  /// Executes one step; returns the finished episode's return when the step
  /// ended an episode.
  std::optional<double> step(const Policy& policy, ReplayBuffer* buffer) {
    if (obs_.empty()) begin();
    const std::vector<double> action = policy(obs_);
    envs::StepResult r = env_.step(action);
    if (buffer) buffer->push({obs_, action, r.reward, r.observation, r.terminal});
    episode_return_ += r.reward;
    obs_ = std::move(r.observation);
    if (r.done()) {
      const double finished = episode_return_;
      ++episode_;
      begin();
      return finished;
    }
    return std::nullopt;
  }

  const std::vector<double>& observation() const { return obs_; }
  std::uint64_t episode_index() const { return episode_; }
  double episode_return() const { return episode_return_; }

  /// Restores bookkeeping after the environment state has been loaded.
  void restore(std::vector<double> obs, std::uint64_t episode, double episode_return) {
    obs_ = std::move(obs);
    episode_ = episode;
    episode_return_ = episode_return;
  }

 private:
  envs::Environment& env_;
  std::uint64_t episode_seed_;
  std::uint64_t episode_ = 0;
  double episode_return_ = 0.0;
  std::vector<double> obs_;
};

/// Runs `steps` environment steps; returns the undiscounted return of every
/// episode completed in that span.
inline std::vector<double> rollout(envs::Environment& env, const Policy& policy, ReplayBuffer* buffer,
                                   std::size_t steps, std::uint64_t episode_seed) {
  Rollout r(env, episode_seed);
  std::vector<double> returns;
  for (std::size_t i = 0; i < steps; ++i)
    if (auto done = r.step(policy, buffer)) returns.push_back(*done);
  return returns;
}

/// Return of one full episode from a given reset seed.
inline double run_episode(envs::Environment& env, const Policy& policy, std::uint64_t reset_seed) {
  std::vector<double> obs = env.reset(reset_seed);
  double total = 0.0;
  for (std::size_t t = 0; t < env.spec().max_episode_steps; ++t) {
    envs::StepResult r = env.step(policy(obs));
    total += r.reward;
    obs = std::move(r.observation);
    if (r.done()) break;
  }
  return total;
}

/// Per-episode returns on fresh copies of `proto`; episode k resets with
/// derive_seed(seed, eval, k).
inline std::vector<double> evaluate_returns(const envs::Environment& proto, const Policy& policy,
                                            std::size_t episodes, std::uint64_t seed) {
  std::vector<double> returns;
  for (std::size_t k = 0; k < episodes; ++k) {
    auto env = proto.clone();
    returns.push_back(run_episode(*env, policy, derive_seed(seed, Stream::eval, k)));
  }
  return returns;
}

/// Arithmetic mean of the evaluation returns.
inline double evaluate(const envs::Environment& proto, const Policy& policy, std::size_t episodes,
                       std::uint64_t seed) {
  if (episodes == 0) throw ContractError("evaluate: episodes must be >= 1");
  const std::vector<double> r = evaluate_returns(proto, policy, episodes, seed);
  return std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
}

}  // namespace bptsan::rl
