#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bptsan/harness/config.hpp"
#include "bptsan/harness/metrics.hpp"
#include "bptsan/harness/trainer.hpp"

namespace bptsan::harness {

/// Outcome of one (algorithm, variant, seed) cell.
struct AblationRow {
  rl::Algorithm algorithm = rl::Algorithm::td3;
  snn::Variant variant = snn::Variant::bpt_san;
  std::uint64_t seed = 0;
  double max_eval_return = 0.0;    // best evaluation point of the run
  double final_eval_return = 0.0;  // evaluation after the last step
  std::string status = "ok";       // "ok" or "failed: <reason>"
  bool ok() const { return status == "ok"; }
};

inline constexpr const char* kAblationHeader = "algorithm,variant,seed,max_eval_return,final_eval_return,status";
inline constexpr const char* kSummaryHeader =
    "algorithm,variant,seeds_ok,seeds_failed,mean_max_eval_return,mean_final_eval_return";

inline std::string cell_name(rl::Algorithm a, snn::Variant v, std::uint64_t seed) {
  return std::string(rl::to_string(a)) + "_" + std::string(snn::to_string(v)) + "_seed" + std::to_string(seed);
}

/// Trains one cell from `base` with the algorithm, variant and seed replaced.
/// Metrics go to `log_path` when it is non-empty.
inline AblationRow run_cell(const RunConfig& base, rl::Algorithm algorithm, snn::Variant variant,
                            std::uint64_t seed, const std::filesystem::path& log_path = {}) {
  AblationRow row{algorithm, variant, seed};
  try {
    RunConfig cfg = base;
    cfg.algorithm = algorithm;
    cfg.actor.variant = variant;
    cfg.seed = seed;
    Trainer trainer(cfg);
    std::optional<MetricsLog> log;
    if (!log_path.empty()) log.emplace(log_path, false);
    std::optional<MetricRecord> last;
    double best = -INFINITY;
    trainer.run_to_end([&](const MetricRecord& r) {
      if (log) log->write(r);
      best = std::max(best, r.mean_eval_return);
      last = r;
    });
    row.final_eval_return =
        last && last->step == trainer.step() ? last->mean_eval_return : trainer.evaluate(cfg.eval_episodes);
    row.max_eval_return = std::max(best, row.final_eval_return);
    if (!std::isfinite(row.max_eval_return) || !std::isfinite(row.final_eval_return))
      row.status = "failed: non-finite return";
  } catch (const std::exception& e) {
    row.status = std::string("failed: ") + e.what();
  }
  return row;
}

/// Runs the algorithm x variant x seed matrix. A failing cell is recorded
/// and the remaining cells still run.
inline std::vector<AblationRow> run_ablation(const RunConfig& base, const std::vector<std::uint64_t>& seeds,
                                             const std::filesystem::path& log_dir = {},
                                             const std::function<void(const AblationRow&)>& on_row = {}) {
  if (seeds.empty()) throw ConfigError("ablate: at least one seed is required");
  std::vector<AblationRow> rows;
  for (rl::Algorithm a : base.ablate_algorithms)
    for (snn::Variant v : base.ablate_variants)
      for (std::uint64_t s : seeds) {
        const std::filesystem::path log = log_dir.empty() ? log_dir : log_dir / (cell_name(a, v, s) + ".csv");
        rows.push_back(run_cell(base, a, v, s, log));
        if (on_row) on_row(rows.back());
      }
  return rows;
}

inline std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

inline std::string format_row(const AblationRow& r) {
  return std::string(rl::to_string(r.algorithm)) + "," + std::string(snn::to_string(r.variant)) + "," +
         std::to_string(r.seed) + "," + detail::format_double(r.max_eval_return) + "," +
         detail::format_double(r.final_eval_return) + "," + csv_field(r.status);
}

/// Per (algorithm, variant) means over the successful seeds, in matrix order.
inline std::vector<std::string> summarize(const std::vector<AblationRow>& rows) {
  struct Acc {
    std::size_t ok = 0, failed = 0;
    double max_sum = 0.0, final_sum = 0.0;
  };
  std::vector<std::pair<rl::Algorithm, snn::Variant>> order;
  std::map<std::pair<int, int>, Acc> acc;
  for (const auto& r : rows) {
    const std::pair<int, int> key{static_cast<int>(r.algorithm), static_cast<int>(r.variant)};
    if (!acc.count(key)) order.emplace_back(r.algorithm, r.variant);
    Acc& a = acc[key];
    if (r.ok()) {
      ++a.ok;
      a.max_sum += r.max_eval_return;
      a.final_sum += r.final_eval_return;
    } else {
      ++a.failed;
    }
  }
  std::vector<std::string> lines;
  for (auto [alg, var] : order) {
    const Acc& a = acc[{static_cast<int>(alg), static_cast<int>(var)}];
    auto mean = [&](double sum) { return a.ok ? detail::format_double(sum / static_cast<double>(a.ok)) : "nan"; };
    lines.push_back(std::string(rl::to_string(alg)) + "," + std::string(snn::to_string(var)) + "," +
                    std::to_string(a.ok) + "," + std::to_string(a.failed) + "," + mean(a.max_sum) + "," +
                    mean(a.final_sum));
  }
  return lines;
}

}  // namespace bptsan::harness
