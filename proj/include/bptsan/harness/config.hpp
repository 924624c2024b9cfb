#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bptsan/encoding/encoding.hpp"
#include "bptsan/errors.hpp"
#include "bptsan/rl/agents.hpp"
#include "bptsan/snn/actor.hpp"

namespace bptsan::harness {

/// Complete description of one run. Text form: flat `key = value` lines,
/// `#` comments, section prefixes such as `snn.d = 2`.
struct RunConfig {
  std::string env = "pendulum";
  rl::Algorithm algorithm = rl::Algorithm::td3;
  std::uint64_t seed = 0;
  std::size_t total_steps = 30000;
  std::size_t eval_interval = 1000;
  std::size_t eval_episodes = 10;
  /// "auto" picks deterministic coding for pendulum, Poisson for reacher.
  std::string coding = "auto";
  bool wall_clock = false;

  snn::ActorConfig actor;
  rl::RlConfig rl;
  rl::Td3Config td3;
  rl::SacConfig sac;

  std::vector<snn::Variant> ablate_variants{snn::Variant::aan, snn::Variant::san, snn::Variant::bpt_san,
                                            snn::Variant::bpt_san_no_ndt, snn::Variant::bpt_san_no_li};
  std::vector<rl::Algorithm> ablate_algorithms{rl::Algorithm::td3, rl::Algorithm::sac};

  encoding::SpikeCoding resolved_coding() const {
    if (coding == "poisson") return encoding::SpikeCoding::poisson;
    if (coding == "deterministic") return encoding::SpikeCoding::deterministic;
    return env == "reacher" ? encoding::SpikeCoding::poisson : encoding::SpikeCoding::deterministic;
  }

  /// Actor settings with the spike coding resolved against the environment.
  snn::ActorConfig actor_config() const {
    snn::ActorConfig a = actor;
    a.coding = resolved_coding();
    return a;
  }

  void validate() const {
    if (env != "pendulum" && env != "reacher") throw ConfigError("env: unknown environment '" + env + "'");
    if (eval_interval == 0) throw ConfigError("eval_interval: must be >= 1");
    if (eval_episodes == 0) throw ConfigError("eval_episodes: must be >= 1");
    if (coding != "auto" && coding != "poisson" && coding != "deterministic")
      throw ConfigError("encoder.coding: expected auto | poisson | deterministic");
    actor.validate();
    rl.validate();
    td3.validate();
    sac.validate();
    if (ablate_variants.empty()) throw ConfigError("ablate.variants: must list at least one variant");
    if (ablate_algorithms.empty()) throw ConfigError("ablate.algorithms: must list at least one algorithm");
  }

  friend bool operator==(const RunConfig& a, const RunConfig& b);
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw ContractError("format_double failed");
  return std::string(buf, end);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("expected a finite real number, got '" + s + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    throw ConfigError("expected a non-negative integer, got '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("expected true | false, got '" + s + "'");
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty entry in list '" + s + "'");
    out.push_back(item);
  }
  if (out.empty()) throw ConfigError("expected a non-empty comma-separated list");
  return out;
}

inline std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) out.push_back(static_cast<std::size_t>(parse_u64(item)));
  return out;
}

template <class T, class F>
std::string join(const std::vector<T>& items, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += fmt(items[i]);
  }
  return out;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define BPTSAN_REAL_FIELD(KEY, MEMBER)                                                            \
  Field {                                                                                         \
    KEY, [](RunConfig& c, const std::string& v) { c.MEMBER = parse_double(v); },                  \
        [](const RunConfig& c) { return format_double(c.MEMBER); }                                \
  }
#define BPTSAN_SIZE_FIELD(KEY, MEMBER)                                                            \
  Field {                                                                                         \
    KEY, [](RunConfig& c, const std::string& v) { c.MEMBER = static_cast<std::size_t>(parse_u64(v)); }, \
        [](const RunConfig& c) { return std::to_string(c.MEMBER); }                               \
  }
#define BPTSAN_BOOL_FIELD(KEY, MEMBER)                                                            \
  Field {                                                                                         \
    KEY, [](RunConfig& c, const std::string& v) { c.MEMBER = parse_bool(v); },                    \
        [](const RunConfig& c) { return std::string(c.MEMBER ? "true" : "false"); }               \
  }

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"env", [](RunConfig& c, const std::string& v) { c.env = v; }, [](const RunConfig& c) { return c.env; }},
      Field{"algorithm",
            [](RunConfig& c, const std::string& v) {
              auto a = rl::parse_algorithm(v);
              if (!a) throw ConfigError("expected td3 | sac, got '" + v + "'");
              c.algorithm = *a;
            },
            [](const RunConfig& c) { return std::string(rl::to_string(c.algorithm)); }},
      Field{"actor_variant",
            [](RunConfig& c, const std::string& v) {
              auto a = snn::parse_variant(v);
              if (!a) throw ConfigError("expected aan | san | bpt-san | bpt-san-no-ndt | bpt-san-no-li, got '" + v + "'");
              c.actor.variant = *a;
            },
            [](const RunConfig& c) { return std::string(snn::to_string(c.actor.variant)); }},
      Field{"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_u64(v); },
            [](const RunConfig& c) { return std::to_string(c.seed); }},
      BPTSAN_SIZE_FIELD("total_steps", total_steps),
      BPTSAN_SIZE_FIELD("eval_interval", eval_interval),
      BPTSAN_SIZE_FIELD("eval_episodes", eval_episodes),
      Field{"snn.hidden", [](RunConfig& c, const std::string& v) { c.actor.hidden = parse_sizes(v); },
            [](const RunConfig& c) { return join(c.actor.hidden, [](std::size_t x) { return std::to_string(x); }); }},
      BPTSAN_SIZE_FIELD("snn.time_window", actor.time_window),
      BPTSAN_REAL_FIELD("snn.d_c", actor.lif.current_decay),
      BPTSAN_REAL_FIELD("snn.d_v", actor.lif.potential_decay),
      BPTSAN_REAL_FIELD("snn.v_th", actor.lif.threshold),
      BPTSAN_REAL_FIELD("snn.rest", actor.lif.rest),
      BPTSAN_REAL_FIELD("snn.w", actor.lif.surrogate_window),
      BPTSAN_SIZE_FIELD("snn.d", actor.branches),
      BPTSAN_SIZE_FIELD("snn.lateral_radius", actor.lateral_radius),
      BPTSAN_BOOL_FIELD("snn.output_topology", actor.output_topology),
      Field{"encoder.coding", [](RunConfig& c, const std::string& v) { c.coding = v; },
            [](const RunConfig& c) { return c.coding; }},
      BPTSAN_SIZE_FIELD("encoder.pop_size", actor.pop_size),
      BPTSAN_BOOL_FIELD("encoder.trainable", actor.encoder_trainable),
      BPTSAN_REAL_FIELD("rl.gamma", rl.gamma),
      BPTSAN_REAL_FIELD("rl.polyak", rl.polyak),
      BPTSAN_SIZE_FIELD("rl.batch_size", rl.batch_size),
      BPTSAN_REAL_FIELD("rl.actor_lr", rl.actor_lr),
      BPTSAN_REAL_FIELD("rl.critic_lr", rl.critic_lr),
      BPTSAN_SIZE_FIELD("rl.warmup_steps", rl.warmup_steps),
      BPTSAN_SIZE_FIELD("rl.buffer_capacity", rl.buffer_capacity),
      Field{"rl.critic_hidden", [](RunConfig& c, const std::string& v) { c.rl.critic_hidden = parse_sizes(v); },
            [](const RunConfig& c) { return join(c.rl.critic_hidden, [](std::size_t x) { return std::to_string(x); }); }},
      BPTSAN_SIZE_FIELD("td3.policy_delay", td3.policy_delay),
      BPTSAN_REAL_FIELD("td3.target_noise", td3.target_noise),
      BPTSAN_REAL_FIELD("td3.noise_clip", td3.noise_clip),
      BPTSAN_REAL_FIELD("td3.exploration_noise", td3.exploration_noise),
      BPTSAN_REAL_FIELD("sac.alpha", sac.alpha),
      BPTSAN_BOOL_FIELD("sac.auto_alpha", sac.auto_alpha),
      BPTSAN_REAL_FIELD("sac.alpha_lr", sac.alpha_lr),
      BPTSAN_REAL_FIELD("sac.log_std_init", sac.log_std_init),
      BPTSAN_BOOL_FIELD("log.wall_clock", wall_clock),
      Field{"ablate.variants",
            [](RunConfig& c, const std::string& v) {
              c.ablate_variants.clear();
              for (const auto& item : split_list(v)) {
                auto a = snn::parse_variant(item);
                if (!a) throw ConfigError("unknown variant '" + item + "'");
                c.ablate_variants.push_back(*a);
              }
            },
            [](const RunConfig& c) {
              return join(c.ablate_variants, [](snn::Variant x) { return std::string(snn::to_string(x)); });
            }},
      Field{"ablate.algorithms",
            [](RunConfig& c, const std::string& v) {
              c.ablate_algorithms.clear();
              for (const auto& item : split_list(v)) {
                auto a = rl::parse_algorithm(item);
                if (!a) throw ConfigError("unknown algorithm '" + item + "'");
                c.ablate_algorithms.push_back(*a);
              }
            },
            [](const RunConfig& c) {
              return join(c.ablate_algorithms, [](rl::Algorithm x) { return std::string(rl::to_string(x)); });
            }},
  };
  return table;
}

#undef BPTSAN_REAL_FIELD
#undef BPTSAN_SIZE_FIELD
#undef BPTSAN_BOOL_FIELD

inline const Field* find_field(std::string_view key) {
  for (const Field& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

}  // namespace detail

/// Sets one key from its text value. `where` prefixes error messages.
inline void set_key(RunConfig& cfg, const std::string& key, const std::string& value, const std::string& where) {
  const detail::Field* f = detail::find_field(key);
  if (!f) throw ConfigError(where + "unknown key '" + key + "'");
  try {
    f->set(cfg, value);
  } catch (const ConfigError& e) {
    throw ConfigError(where + "key '" + key + "': " + e.what());
  }
}

/// Applies a `key=value` override.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "': expected key=value");
  set_key(cfg, detail::trim(assignment.substr(0, eq)), detail::trim(assignment.substr(eq + 1)),
          "override '" + assignment + "': ");
}

/// Parses config text on top of the defaults, then validates. Errors name the
/// source and line.
inline RunConfig parse_config(std::string_view text, const std::string& source = "<config>") {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    set_key(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)), where);
  }
  return cfg;
}

/// Canonical text form listing every key.
inline std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : detail::fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

inline bool operator==(const RunConfig& a, const RunConfig& b) { return serialize_config(a) == serialize_config(b); }

}  // namespace bptsan::harness
