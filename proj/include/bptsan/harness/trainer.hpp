#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bptsan/envs/envs.hpp"
#include "bptsan/errors.hpp"
#include "bptsan/harness/checkpoint.hpp"
#include "bptsan/harness/config.hpp"
#include "bptsan/harness/metrics.hpp"
#include "bptsan/random.hpp"
#include "bptsan/rl/agents.hpp"
#include "bptsan/rl/rollout.hpp"

namespace bptsan::harness {

inline snn::ActorShape actor_shape(const envs::EnvSpec& spec) {
  return {spec.state_dim, spec.action_dim, spec.obs_low, spec.obs_high, spec.action_low, spec.action_high};
}

/// Builds the actor a run config describes. Every stream comes from the one
/// run seed: weights from (init, 0), masks from (mask, 0).
inline snn::ActorNetwork make_actor(const RunConfig& cfg, const envs::EnvSpec& spec) {
  return snn::ActorNetwork(cfg.actor_config(), actor_shape(spec), derive_seed(cfg.seed, Stream::init, 0),
                           derive_seed(cfg.seed, Stream::mask, 0));
}

inline std::unique_ptr<rl::Agent> make_agent(const RunConfig& cfg, const snn::ActorNetwork& actor) {
  if (cfg.algorithm == rl::Algorithm::td3) return std::make_unique<rl::Td3Agent>(actor, cfg.rl, cfg.td3, cfg.seed);
  return std::make_unique<rl::SacAgent>(actor, cfg.rl, cfg.sac, cfg.seed);
}

/// Deterministic evaluation of an agent's policy: fixed episode seeds, no
/// exploration, and a fresh encoder stream per call.
inline double evaluate_agent(rl::Agent& agent, const envs::Environment& proto, const RunConfig& cfg,
                             std::size_t episodes) {
  Rng encoder_rng(derive_seed(cfg.seed, Stream::encoder, 1));
  Rng unused(0);
  rl::Policy policy = [&](std::span<const double> obs) { return agent.act(obs, false, encoder_rng, unused); };
  return rl::evaluate(proto, policy, episodes, derive_seed(cfg.seed, Stream::eval, 0));
}

/// The rollout/update loop of one run. All state that influences the future
/// trajectory is captured by snapshot(), so restore(snapshot()) followed by
/// N steps matches N uninterrupted steps bit for bit.
class Trainer {
 public:
  using Sink = std::function<void(const MetricRecord&)>;

  explicit Trainer(RunConfig cfg)
      : cfg_(std::move(cfg)),
        env_((cfg_.validate(), envs::make_env(cfg_.env))),
        proto_(env_->clone()),
        agent_(make_agent(cfg_, make_actor(cfg_, env_->spec()))),
        buffer_(cfg_.rl.buffer_capacity, env_->spec().state_dim, env_->spec().action_dim),
        rollout_(*env_, derive_seed(cfg_.seed, Stream::env, 0)),
        explore_rng_(derive_seed(cfg_.seed, Stream::explore, 0)),
        update_rng_(derive_seed(cfg_.seed, Stream::explore, 1)),
        encoder_rng_(derive_seed(cfg_.seed, Stream::encoder, 0)),
        replay_rng_(derive_seed(cfg_.seed, Stream::replay, 0)),
        started_(std::chrono::steady_clock::now()) {
    rollout_.begin();
  }

  const RunConfig& config() const { return cfg_; }
  std::uint64_t step() const { return step_; }
  rl::Agent& agent() { return *agent_; }
  const rl::ReplayBuffer& buffer() const { return buffer_; }
  const envs::Environment& env() const { return *env_; }

  /// Advances up to `steps` environment steps without passing total_steps.
  void run(std::uint64_t steps, const Sink& sink = {}) {
    for (std::uint64_t i = 0; i < steps && step_ < cfg_.total_steps; ++i) advance(sink);
  }

  void run_to_end(const Sink& sink = {}) { run(cfg_.total_steps - std::min<std::uint64_t>(step_, cfg_.total_steps), sink); }

  double evaluate(std::size_t episodes) { return evaluate_agent(*agent_, *proto_, cfg_, episodes); }

  CheckpointData snapshot() {
    CheckpointData c;
    c.config_text = serialize_config(cfg_);
    std::ostringstream s;
    s << "step=" << step_ << '\n';
    s << "episode=" << rollout_.episode_index() << '\n';
    s << "episode_return=" << detail::format_double(rollout_.episode_return()) << '\n';
    s << "replay.size=" << buffer_.size() << '\n';
    s << "replay.cursor=" << buffer_.cursor() << '\n';
    s << "loss.actor_sum=" << detail::format_double(actor_sum_) << '\n';
    s << "loss.actor_count=" << actor_count_ << '\n';
    s << "loss.critic_sum=" << detail::format_double(critic_sum_) << '\n';
    s << "loss.critic_count=" << critic_count_ << '\n';
    for (auto& [name, value] : agent_->counters()) s << "counter." << name << '=' << *value << '\n';
    s << "mask_seeds=" << detail::join(agent_->actor().mask_seeds(), [](std::uint64_t x) { return std::to_string(x); })
      << '\n';
    for (auto& [name, rng] : rngs()) s << "rng." << name << '=' << rng->save() << '\n';
    c.state_text = s.str();

    c.arrays.push_back({"env.state", env_->save_state()});
    const char* cols[] = {"replay.states", "replay.actions", "replay.rewards", "replay.next_states", "replay.dones"};
    auto columns = buffer_.columns();
    for (std::size_t k = 0; k < 5; ++k) c.arrays.push_back({cols[k], std::move(columns[k])});
    for (const auto& e : agent_->state()) c.arrays.push_back({e.name, e.tensor->data});
    return c;
  }

  /// Rebuilds a trainer from a checkpoint. Everything is validated before
  /// the returned trainer is handed out, so a failed load leaves nothing
  /// half-applied.
  static std::unique_ptr<Trainer> from_checkpoint(const CheckpointData& c,
                                                  const std::vector<std::string>& overrides = {}) {
    RunConfig cfg;
    try {
      cfg = parse_config(c.config_text, "<checkpoint config>");
      for (const auto& o : overrides) apply_override(cfg, o);
    } catch (const ConfigError& e) {
      throw CheckpointError(std::string("checkpoint config: ") + e.what());
    }
    auto t = std::make_unique<Trainer>(cfg);
    t->restore(c);
    return t;
  }

 private:
  std::vector<std::pair<std::string, Rng*>> rngs() {
    return {{"explore", &explore_rng_}, {"update", &update_rng_}, {"encoder", &encoder_rng_}, {"replay", &replay_rng_}};
  }

  void advance(const Sink& sink) {
    const envs::EnvSpec& spec = env_->spec();
    rl::Policy policy = [&](std::span<const double> obs) {
      if (step_ < cfg_.rl.warmup_steps) {
        std::vector<double> a(spec.action_dim);
        for (std::size_t m = 0; m < a.size(); ++m) a[m] = explore_rng_.uniform(spec.action_low[m], spec.action_high[m]);
        return a;
      }
      return agent_->act(obs, true, encoder_rng_, explore_rng_);
    };
    rollout_.step(policy, &buffer_);
    ++step_;
    if (step_ >= cfg_.rl.warmup_steps && buffer_.size() >= cfg_.rl.batch_size) {
      const rl::Batch batch = buffer_.sample(cfg_.rl.batch_size, replay_rng_);
      const rl::UpdateStats stats = agent_->update(batch, encoder_rng_, update_rng_);
      critic_sum_ += stats.critic_loss;
      ++critic_count_;
      if (stats.actor_loss) {
        actor_sum_ += *stats.actor_loss;
        ++actor_count_;
      }
    }
    if (step_ % cfg_.eval_interval == 0) {
      MetricRecord r;
      r.step = step_;
      r.mean_eval_return = evaluate(cfg_.eval_episodes);
      if (actor_count_) r.actor_loss = actor_sum_ / static_cast<double>(actor_count_);
      if (critic_count_) r.critic_loss = critic_sum_ / static_cast<double>(critic_count_);
      if (cfg_.wall_clock)
        r.wall_ms = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started_).count());
      r.seed = cfg_.seed;
      actor_sum_ = critic_sum_ = 0.0;
      actor_count_ = critic_count_ = 0;
      if (sink) sink(r);
    }
  }

  void restore(const CheckpointData& c) {
    std::map<std::string, std::string> kv;
    std::istringstream in(c.state_text);
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw CheckpointError("malformed checkpoint state line '" + line + "'");
      kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto text = [&](const std::string& key) -> const std::string& {
      auto it = kv.find(key);
      if (it == kv.end()) throw CheckpointError("checkpoint state lacks '" + key + "'");
      return it->second;
    };
    auto u64 = [&](const std::string& key) {
      try {
        return detail::parse_u64(text(key));
      } catch (const ConfigError&) {
        throw CheckpointError("checkpoint state '" + key + "' is not an integer");
      }
    };
    auto real = [&](const std::string& key) {
      try {
        return detail::parse_double(text(key));
      } catch (const ConfigError&) {
        throw CheckpointError("checkpoint state '" + key + "' is not a real number");
      }
    };
    auto array = [&](const std::string& name, std::size_t expected) -> const std::vector<double>& {
      const NamedArray* a = c.find(name);
      if (!a) throw CheckpointError("checkpoint lacks array '" + name + "'");
      if (expected != static_cast<std::size_t>(-1) && a->values.size() != expected)
        throw CheckpointError("checkpoint array '" + name + "' has " + std::to_string(a->values.size()) +
                              " values, expected " + std::to_string(expected));
      return a->values;
    };

    const std::uint64_t step = u64("step");
    const std::uint64_t episode = u64("episode");
    const double episode_return = real("episode_return");
    std::vector<std::uint64_t> mask_seeds;
    if (!text("mask_seeds").empty())
      for (const auto& s : detail::split_list(text("mask_seeds"))) mask_seeds.push_back(detail::parse_u64(s));
    std::vector<std::pair<Rng*, std::string>> rng_states;
    for (auto& [name, rng] : rngs()) rng_states.emplace_back(rng, text("rng." + name));
    std::vector<std::pair<std::uint64_t*, std::uint64_t>> counter_values;
    for (auto& [name, value] : agent_->counters()) counter_values.emplace_back(value, u64("counter." + name));
    std::vector<std::vector<double>> columns;
    for (const char* name : {"replay.states", "replay.actions", "replay.rewards", "replay.next_states", "replay.dones"})
      columns.push_back(array(name, static_cast<std::size_t>(-1)));
    std::vector<std::pair<Tensor*, const std::vector<double>*>> tensors;
    for (const auto& e : agent_->state()) tensors.emplace_back(e.tensor, &array(e.name, e.tensor->size()));
    const std::vector<double>& env_state = array("env.state", static_cast<std::size_t>(-1));

    buffer_.restore(std::move(columns), u64("replay.size"), u64("replay.cursor"));
    env_->load_state(env_state);
    agent_->actor().restore_mask_seeds(mask_seeds);
    if (auto* td3 = dynamic_cast<rl::Td3Agent*>(agent_.get())) td3->actor_target().restore_mask_seeds(mask_seeds);
    for (auto& [rng, state] : rng_states) rng->load(state);
    for (auto& [ptr, value] : counter_values) *ptr = value;
    for (auto& [tensor, values] : tensors) tensor->data = *values;
    rollout_.restore(env_->observation(), episode, episode_return);
    step_ = step;
    actor_sum_ = real("loss.actor_sum");
    actor_count_ = u64("loss.actor_count");
    critic_sum_ = real("loss.critic_sum");
    critic_count_ = u64("loss.critic_count");
  }

  RunConfig cfg_;
  std::unique_ptr<envs::Environment> env_;
  std::unique_ptr<envs::Environment> proto_;
  std::unique_ptr<rl::Agent> agent_;
  rl::ReplayBuffer buffer_;
  rl::Rollout rollout_;
  Rng explore_rng_, update_rng_, encoder_rng_, replay_rng_;
  std::uint64_t step_ = 0;
  double actor_sum_ = 0.0, critic_sum_ = 0.0;
  std::uint64_t actor_count_ = 0, critic_count_ = 0;
  std::chrono::steady_clock::time_point started_;
};

}  // namespace bptsan::harness
