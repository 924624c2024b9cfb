#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "bptsan/errors.hpp"
#include "bptsan/harness/config.hpp"

namespace bptsan::harness {

inline constexpr const char* kMetricsHeader = "step,mean_eval_return,actor_loss,critic_loss,wall_ms,seed";

/// One evaluation point. Losses are means over the updates since the previous
/// record; absent when no update of that kind ran.
struct MetricRecord {
  std::uint64_t step = 0;
  double mean_eval_return = 0.0;
  std::optional<double> actor_loss;
  std::optional<double> critic_loss;
  std::uint64_t wall_ms = 0;
  std::uint64_t seed = 0;
};

inline std::string format_optional(const std::optional<double>& v) {
  return v ? detail::format_double(*v) : std::string("nan");
}

inline std::string format_record(const MetricRecord& r) {
  return std::to_string(r.step) + "," + detail::format_double(r.mean_eval_return) + "," +
         format_optional(r.actor_loss) + "," + format_optional(r.critic_loss) + "," + std::to_string(r.wall_ms) +
         "," + std::to_string(r.seed);
}

/// Append-only CSV sink, flushed after every line.
class MetricsLog {
 public:
  /// Starts a fresh log (header only), or appends to an existing one when
  /// `append` is set.
  MetricsLog(const std::filesystem::path& path, bool append) {
    const bool existing = append && std::filesystem::exists(path);
    out_.open(path, existing ? std::ios::app : std::ios::trunc);
    if (!out_) throw ConfigError("cannot open metrics file " + path.string());
    if (!existing) line(kMetricsHeader);
  }

  void write(const MetricRecord& r) { line(format_record(r)); }

 private:
  void line(const std::string& s) {
    out_ << s << '\n';
    out_.flush();
  }
  std::ofstream out_;
};

}  // namespace bptsan::harness
