#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bptsan/diffcore/ops.hpp"
#include "bptsan/errors.hpp"
#include "bptsan/random.hpp"
#include "bptsan/rl/components.hpp"
#include "bptsan/snn/actor.hpp"

namespace bptsan::rl {

enum class Algorithm { td3, sac };

inline std::string_view to_string(Algorithm a) { return a == Algorithm::td3 ? "td3" : "sac"; }

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  if (s == "td3") return Algorithm::td3;
  if (s == "sac") return Algorithm::sac;
  return std::nullopt;
}

/// Settings shared by both algorithms.
struct RlConfig {
  double gamma = 0.99;
  double polyak = 0.005;
  std::size_t batch_size = 256;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  std::size_t warmup_steps = 1000;
  std::size_t buffer_capacity = 1000000;
  std::vector<std::size_t> critic_hidden{256, 256};

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("rl.gamma must lie in (0, 1)");
    if (!(polyak > 0.0 && polyak <= 1.0)) throw ConfigError("rl.polyak must lie in (0, 1]");
    if (batch_size == 0) throw ConfigError("rl.batch_size must be >= 1");
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw ConfigError("learning rates must be > 0");
    if (buffer_capacity == 0) throw ConfigError("rl.buffer_capacity must be >= 1");
    if (critic_hidden.empty()) throw ConfigError("rl.critic_hidden must list at least one layer");
  }
};

struct Td3Config {
  std::size_t policy_delay = 2;
  double target_noise = 0.2;       // fraction of the action half-range
  double noise_clip = 0.5;         // fraction of the action half-range
  double exploration_noise = 0.1;  // fraction of the action half-range

  void validate() const {
    if (policy_delay < 1) throw ConfigError("td3.policy_delay must be >= 1");
    if (target_noise < 0.0 || noise_clip < 0.0 || exploration_noise < 0.0)
      throw ConfigError("td3 noise scales must be >= 0");
  }
};

struct SacConfig {
  double alpha = 0.2;
  bool auto_alpha = false;  // tune alpha towards entropy -M
  double alpha_lr = 1e-3;
  double log_std_init = -0.5;
  double log_std_min = -20.0;
  double log_std_max = 2.0;

  void validate() const {
    if (!(alpha > 0.0)) throw ConfigError("sac.alpha must be > 0");
    if (!(alpha_lr > 0.0)) throw ConfigError("sac.alpha_lr must be > 0");
    if (!(log_std_min < log_std_max)) throw ConfigError("sac log-std bounds must satisfy min < max");
  }
};

struct UpdateStats {
  double critic_loss = 0.0;
  std::optional<double> actor_loss;
};

/// Named handle on a piece of mutable agent state (checkpoint traversal).
struct StateEntry {
  std::string name;
  Tensor* tensor;
};

/// Actor-critic learner driving an ActorNetwork against twin critic MLPs.
/// Agents keep raw pointers into their own members (optimizers), so they are
/// neither copyable nor movable.
class Agent {
 public:
  Agent() = default;
  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;
  virtual ~Agent() = default;

  virtual Algorithm algorithm() const = 0;

  /// Action for one observation. With explore = false the policy is
  /// deterministic (TD3: no noise; SAC: squashed mean).
  virtual std::vector<double> act(std::span<const double> obs, bool explore, Rng& encoder_rng, Rng& noise_rng) = 0;

  /// One gradient update from a minibatch.
  virtual UpdateStats update(const Batch& batch, Rng& encoder_rng, Rng& noise_rng) = 0;

  /// Critic regression targets for a batch (no parameter change).
  virtual Tensor targets(const Batch& batch, Rng& encoder_rng, Rng& noise_rng) = 0;

  virtual snn::ActorNetwork& actor() = 0;
  virtual std::vector<StateEntry> state() = 0;
  virtual std::vector<std::pair<std::string, std::uint64_t*>> counters() = 0;
};

namespace detail {

inline std::vector<StateEntry> param_entries(const std::string& prefix, const std::vector<Parameter*>& ps) {
  std::vector<StateEntry> out;
  for (Parameter* p : ps) out.push_back({prefix + p->name, &p->value});
  return out;
}

inline void adam_entries(std::vector<StateEntry>& out, const std::string& prefix, Adam& opt) {
  const auto& ps = opt.params();
  for (std::size_t k = 0; k < ps.size(); ++k) {
    out.push_back({prefix + ".m." + ps[k]->name, &opt.first_moments()[k]});
    out.push_back({prefix + ".v." + ps[k]->name, &opt.second_moments()[k]});
  }
}

inline void append(std::vector<StateEntry>& out, std::vector<StateEntry> more) {
  out.insert(out.end(), more.begin(), more.end());
}

inline std::vector<Parameter*> concat(std::vector<Parameter*> a, const std::vector<Parameter*>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

/// Twin critics, their targets and one optimizer over both online critics.
struct TwinCritics {
  CriticMlp q1, q2, q1_target, q2_target;
  Adam opt;

  TwinCritics(std::size_t n, std::size_t m, const RlConfig& cfg, std::uint64_t seed) {
    Rng init1(derive_seed(seed, Stream::init, 1));
    Rng init2(derive_seed(seed, Stream::init, 2));
    q1 = CriticMlp("q1", n, m, cfg.critic_hidden, init1);
    q2 = CriticMlp("q2", n, m, cfg.critic_hidden, init2);
    q1_target = q1;
    q2_target = q2;
    opt = Adam(concat(q1.parameters(), q2.parameters()), {.lr = cfg.critic_lr});
  }

  /// min(Q1', Q2')(s', a') from the target critics.
  Tensor target_min(const Tensor& states, const Tensor& actions) {
    Tape t;
    Var s = t.constant(states), a = t.constant(actions);
    return diff::minimum(q1_target.forward(t, s, a, false), q2_target.forward(t, s, a, false)).value();
  }

  /// Both critics regress to y; returns the summed MSE.
  double regress(const Batch& b, const Tensor& y) {
    Tape t;
    Var s = t.constant(b.states), a = t.constant(b.actions), target = t.constant(y);
    Var l1 = diff::mean(diff::square(diff::sub(q1.forward(t, s, a), target)));
    Var l2 = diff::mean(diff::square(diff::sub(q2.forward(t, s, a), target)));
    Var loss = diff::add(l1, l2);
    opt.zero_grad();
    t.backward(loss);
    opt.step();
    return loss.value()[0];
  }

  void soft_update(double rate) {
    polyak_update(q1_target.parameters(), q1.parameters(), rate);
    polyak_update(q2_target.parameters(), q2.parameters(), rate);
  }

  void collect(std::vector<StateEntry>& out) {
    append(out, param_entries("", q1.parameters()));
    append(out, param_entries("", q2.parameters()));
    append(out, param_entries("target.", q1_target.parameters()));
    append(out, param_entries("target.", q2_target.parameters()));
    adam_entries(out, "critic_opt", opt);
  }
};

}  // namespace detail

/// Twin-delayed deterministic policy gradient with target policy smoothing.
class Td3Agent final : public Agent {
 public:
  Td3Agent(const snn::ActorNetwork& actor, const RlConfig& rl, const Td3Config& td3, std::uint64_t seed)
      : rl_(rl),
        td3_(td3),
        actor_(actor),
        actor_target_(actor),
        critics_(actor.shape().state_dim, actor.shape().action_dim, rl, seed) {
    rl_.validate();
    td3_.validate();
    actor_opt_ = Adam(actor_.parameters(), {.lr = rl_.actor_lr});
  }

  Algorithm algorithm() const override { return Algorithm::td3; }
  snn::ActorNetwork& actor() override { return actor_; }
  snn::ActorNetwork& actor_target() { return actor_target_; }
  detail::TwinCritics& critics() { return critics_; }

  std::vector<double> act(std::span<const double> obs, bool explore, Rng& encoder_rng, Rng& noise_rng) override {
    std::vector<double> a = actor_.act(obs, &encoder_rng);
    if (explore) {
      const auto& s = actor_.shape();
      for (std::size_t m = 0; m < a.size(); ++m) {
        const double half = 0.5 * (s.action_high[m] - s.action_low[m]);
        a[m] = std::clamp(a[m] + td3_.exploration_noise * half * noise_rng.normal(), s.action_low[m], s.action_high[m]);
      }
    }
    return a;
  }

  Tensor targets(const Batch& b, Rng& encoder_rng, Rng& noise_rng) override {
    Tensor next_actions;
    {
      Tape t;
      next_actions = actor_target_.squash(actor_target_.forward_raw(t, b.next_states, &encoder_rng, false)).value();
    }
    const auto& s = actor_.shape();
    for (std::size_t r = 0; r < next_actions.rows(); ++r) {
      for (std::size_t m = 0; m < next_actions.cols(); ++m) {
        const double half = 0.5 * (s.action_high[m] - s.action_low[m]);
        const double clip = td3_.noise_clip * half;
        const double eps = std::clamp(td3_.target_noise * half * noise_rng.normal(), -clip, clip);
        next_actions.at(r, m) = std::clamp(next_actions.at(r, m) + eps, s.action_low[m], s.action_high[m]);
      }
    }
    return bellman_target(b.rewards, b.dones, critics_.target_min(b.next_states, next_actions), rl_.gamma);
  }

  UpdateStats update(const Batch& b, Rng& encoder_rng, Rng& noise_rng) override {
    UpdateStats stats;
    stats.critic_loss = critics_.regress(b, targets(b, encoder_rng, noise_rng));
    ++updates_;
    if (updates_ % td3_.policy_delay == 0) {
      Tape t;
      Var actions = actor_.squash(actor_.forward_raw(t, b.states, &encoder_rng, true));
      Var q = critics_.q1.forward(t, t.constant(b.states), actions, false);
      Var loss = diff::scale(diff::mean(q), -1.0);
      actor_opt_.zero_grad();
      t.backward(loss);
      actor_opt_.step();
      actor_.enforce_constraints();
      stats.actor_loss = loss.value()[0];
      polyak_update(actor_target_.parameters(), actor_.parameters(), rl_.polyak);
      critics_.soft_update(rl_.polyak);
    }
    return stats;
  }

  std::vector<StateEntry> state() override {
    std::vector<StateEntry> out = detail::param_entries("", actor_.parameters());
    detail::append(out, detail::param_entries("target.", actor_target_.parameters()));
    detail::adam_entries(out, "actor_opt", actor_opt_);
    critics_.collect(out);
    return out;
  }

  std::vector<std::pair<std::string, std::uint64_t*>> counters() override {
    return {{"td3.updates", &updates_}, {"actor_opt.t", &actor_opt_.step_counter()}, {"critic_opt.t", &critics_.opt.step_counter()}};
  }

  std::uint64_t update_count() const { return updates_; }

 private:
  RlConfig rl_;
  Td3Config td3_;
  snn::ActorNetwork actor_;
  snn::ActorNetwork actor_target_;
  detail::TwinCritics critics_;
  Adam actor_opt_;
  std::uint64_t updates_ = 0;
};

/// Log-density of a tanh-squashed diagonal Gaussian at pre-squash value
/// u = mean + std * eps:
///   sum_m [ -eps^2/2 - log std - log(2 pi)/2 ] - sum_m log(1 - tanh(u)^2),
/// with log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)).
inline double squashed_gaussian_log_prob(std::span<const double> pre_tanh, std::span<const double> mean,
                                         std::span<const double> log_std) {
  double lp = 0.0;
  for (std::size_t m = 0; m < pre_tanh.size(); ++m) {
    const double sd = std::exp(log_std[m]);
    const double eps = (pre_tanh[m] - mean[m]) / sd;
    const double u = pre_tanh[m];
    const double softplus = std::max(-2.0 * u, 0.0) + std::log1p(std::exp(-std::abs(-2.0 * u)));
    lp += -0.5 * eps * eps - log_std[m] - 0.5 * std::log(2.0 * std::numbers::pi);
    lp -= 2.0 * (std::numbers::ln2 - u - softplus);
  }
  return lp;
}

/// Soft actor-critic. The actor's pre-squash output is the Gaussian mean; a
/// state-independent trainable log-std supplies the spread.
class SacAgent final : public Agent {
 public:
  SacAgent(const snn::ActorNetwork& actor, const RlConfig& rl, const SacConfig& sac, std::uint64_t seed)
      : rl_(rl),
        sac_(sac),
        actor_(actor),
        critics_(actor.shape().state_dim, actor.shape().action_dim, rl, seed),
        log_std_("log_std", Tensor({actor.shape().action_dim}, sac.log_std_init)),
        log_alpha_("log_alpha", Tensor::scalar(std::log(sac.alpha))) {
    rl_.validate();
    sac_.validate();
    std::vector<Parameter*> ps = actor_.parameters();
    ps.push_back(&log_std_);
    actor_opt_ = Adam(ps, {.lr = rl_.actor_lr});
    alpha_opt_ = Adam({&log_alpha_}, {.lr = sac_.alpha_lr});
  }

  Algorithm algorithm() const override { return Algorithm::sac; }
  snn::ActorNetwork& actor() override { return actor_; }
  detail::TwinCritics& critics() { return critics_; }
  Parameter& log_std() { return log_std_; }
  double alpha() const { return std::exp(log_alpha_.value[0]); }

  struct Sample {
    Var action;    // [B x M], within bounds
    Var log_prob;  // [B x 1]
    Var pre_tanh;  // [B x M]
    Var mean;      // [B x M]
  };

  /// Reparameterised sample a = squash(mean + std * eps) with its log-density.
  Sample sample(Tape& t, const Tensor& states, Rng& encoder_rng, Rng& noise_rng, bool trainable) {
    Var mean = actor_.forward_raw(t, states, &encoder_rng, trainable);
    const std::size_t rows = mean.rows(), m = mean.cols();
    Var log_std = diff::clamp(t.param(log_std_, trainable), sac_.log_std_min, sac_.log_std_max);
    Var log_std_rows = diff::broadcast_rows(log_std, rows);
    Tensor eps = Tensor::matrix(rows, m);
    for (double& e : eps.data) e = noise_rng.normal();
    Tensor base = eps;
    for (double& e : base.data) e = -0.5 * e * e - 0.5 * std::log(2.0 * std::numbers::pi);
    Var u = diff::add(mean, diff::mul(diff::exp(log_std_rows), t.constant(eps)));
    Var gauss = diff::sub(t.constant(base), log_std_rows);
    // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u))
    Var correction = diff::scale(diff::affine(diff::add(u, diff::softplus(diff::scale(u, -2.0))), -1.0, std::numbers::ln2), 2.0);
    Var log_prob = diff::row_sum(diff::sub(gauss, correction));
    return {actor_.squash(u), log_prob, u, mean};
  }

  std::vector<double> act(std::span<const double> obs, bool explore, Rng& encoder_rng, Rng& noise_rng) override {
    if (!explore) return actor_.act(obs, &encoder_rng);
    Tape t;
    Tensor s = Tensor::matrix(1, obs.size(), std::vector<double>(obs.begin(), obs.end()));
    return sample(t, s, encoder_rng, noise_rng, false).action.value().data;
  }

  Tensor targets(const Batch& b, Rng& encoder_rng, Rng& noise_rng) override {
    Tape t;
    Sample next = sample(t, b.next_states, encoder_rng, noise_rng, false);
    Tensor value = critics_.target_min(b.next_states, next.action.value());
    const double a = alpha();
    for (std::size_t i = 0; i < value.size(); ++i) value[i] -= a * next.log_prob.value()[i];
    return bellman_target(b.rewards, b.dones, value, rl_.gamma);
  }

  UpdateStats update(const Batch& b, Rng& encoder_rng, Rng& noise_rng) override {
    UpdateStats stats;
    stats.critic_loss = critics_.regress(b, targets(b, encoder_rng, noise_rng));
    ++updates_;

    Tape t;
    Sample cur = sample(t, b.states, encoder_rng, noise_rng, true);
    Var s = t.constant(b.states);
    Var q = diff::minimum(critics_.q1.forward(t, s, cur.action, false), critics_.q2.forward(t, s, cur.action, false));
    Var loss = diff::mean(diff::sub(diff::scale(cur.log_prob, alpha()), q));
    actor_opt_.zero_grad();
    t.backward(loss);
    actor_opt_.step();
    actor_.enforce_constraints();
    stats.actor_loss = loss.value()[0];

    if (sac_.auto_alpha) {
      // d/d(log alpha) of -mean(log_alpha * (log_prob + target_entropy))
      const double target_entropy = -static_cast<double>(actor_.shape().action_dim);
      double mean_term = 0.0;
      for (double lp : cur.log_prob.value().data) mean_term += lp + target_entropy;
      mean_term /= static_cast<double>(cur.log_prob.value().size());
      alpha_opt_.zero_grad();
      log_alpha_.grad[0] = -mean_term;
      alpha_opt_.step();
    }
    critics_.soft_update(rl_.polyak);
    return stats;
  }

  std::vector<StateEntry> state() override {
    std::vector<StateEntry> out = detail::param_entries("", actor_.parameters());
    out.push_back({"log_std", &log_std_.value});
    out.push_back({"log_alpha", &log_alpha_.value});
    detail::adam_entries(out, "actor_opt", actor_opt_);
    detail::adam_entries(out, "alpha_opt", alpha_opt_);
    critics_.collect(out);
    return out;
  }

  std::vector<std::pair<std::string, std::uint64_t*>> counters() override {
    return {{"sac.updates", &updates_},
            {"actor_opt.t", &actor_opt_.step_counter()},
            {"critic_opt.t", &critics_.opt.step_counter()},
            {"alpha_opt.t", &alpha_opt_.step_counter()}};
  }

  std::uint64_t update_count() const { return updates_; }

 private:
  RlConfig rl_;
  SacConfig sac_;
  snn::ActorNetwork actor_;
  detail::TwinCritics critics_;
  Parameter log_std_;
  Parameter log_alpha_;
  Adam actor_opt_;
  Adam alpha_opt_;
  std::uint64_t updates_ = 0;
};

}  // namespace bptsan::rl
