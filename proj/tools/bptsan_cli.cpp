// Command-line driver: train, eval and ablate subcommands.
//
// Exit codes: 0 success, 1 runtime failure, 2 invalid configuration or
// usage, 3 unreadable or incompatible checkpoint.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bptsan/bptsan.hpp"

namespace fs = std::filesystem;
using namespace bptsan;
using namespace bptsan::harness;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCheckpoint = 3;

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg = parse_config(read_text(path), path);
  for (const auto& o : overrides) apply_override(cfg, o);
  cfg.validate();
  return cfg;
}

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  std::string resume;
};

int cmd_train(const TrainArgs& a) {
  std::vector<std::string> overrides = a.overrides;
  if (a.seed) overrides.push_back("seed=" + std::to_string(*a.seed));
  std::unique_ptr<Trainer> trainer;
  if (!a.resume.empty()) {
    trainer = Trainer::from_checkpoint(read_checkpoint(a.resume), overrides);
  } else {
    if (a.config.empty()) throw ConfigError("train: --config is required (or --resume)");
    trainer = std::make_unique<Trainer>(load_config(a.config, overrides));
  }
  const fs::path out(a.out_dir);
  fs::create_directories(out);
  write_text(out / "config.cfg", serialize_config(trainer->config()));
  MetricsLog log(out / "metrics.csv", !a.resume.empty());
  trainer->run_to_end([&](const MetricRecord& r) {
    log.write(r);
    std::cerr << "step " << r.step << "  eval " << detail::format_double(r.mean_eval_return) << '\n';
  });
  write_checkpoint(out / "checkpoint.bin", trainer->snapshot());
  return 0;
}

int cmd_eval(const std::string& checkpoint, std::optional<std::size_t> episodes, const std::string& out_dir) {
  auto trainer = Trainer::from_checkpoint(read_checkpoint(checkpoint));
  MetricRecord r;
  r.step = trainer->step();
  r.mean_eval_return = trainer->evaluate(episodes.value_or(trainer->config().eval_episodes));
  r.seed = trainer->config().seed;
  std::cout << kMetricsHeader << '\n' << format_record(r) << '\n';
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    MetricsLog(fs::path(out_dir) / "eval.csv", true).write(r);
  }
  return 0;
}

int cmd_ablate(const std::string& config, const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
               const std::vector<std::string>& overrides) {
  const RunConfig cfg = load_config(config, overrides);
  const fs::path out(out_dir);
  fs::create_directories(out / "cells");
  write_text(out / "config.cfg", serialize_config(cfg));
  std::ofstream table(out / "ablation.csv", std::ios::trunc);
  table << kAblationHeader << '\n' << std::flush;
  const auto rows = run_ablation(cfg, seeds, out / "cells", [&](const AblationRow& r) {
    table << format_row(r) << '\n' << std::flush;
    std::cerr << format_row(r) << '\n';
  });
  std::ofstream summary(out / "summary.csv", std::ios::trunc);
  summary << kSummaryHeader << '\n';
  std::cout << kSummaryHeader << '\n';
  for (const auto& line : summarize(rows)) {
    summary << line << '\n';
    std::cout << line << '\n';
  }
  for (const auto& r : rows)
    if (!r.ok()) return kExitRuntime;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Spiking actor deep-RL lab"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "train one run");
  train_cmd->add_option("--config", train.config, "config file");
  train_cmd->add_option("--seed", train.seed, "run seed (overrides the config)");
  train_cmd->add_option("--out-dir", train.out_dir, "output directory");
  train_cmd->add_option("--override", train.overrides, "key=value, repeatable");
  train_cmd->add_option("--resume", train.resume, "continue from a checkpoint");

  std::string checkpoint, eval_out;
  std::optional<std::size_t> episodes;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--episodes", episodes, "evaluation episodes");
  eval_cmd->add_option("--out-dir", eval_out, "append the result to <dir>/eval.csv");

  std::string ablate_config, ablate_out = "ablation";
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::string> ablate_overrides;
  auto* ablate_cmd = app.add_subcommand("ablate", "run the variant x algorithm comparison");
  ablate_cmd->add_option("--config", ablate_config, "base config file")->required();
  ablate_cmd->add_option("--seeds", seeds, "seeds, e.g. --seeds 1 2 3");
  ablate_cmd->add_option("--out-dir", ablate_out, "output directory");
  ablate_cmd->add_option("--override", ablate_overrides, "key=value, repeatable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*train_cmd) return cmd_train(train);
    if (*eval_cmd) return cmd_eval(checkpoint, episodes, eval_out);
    if (*ablate_cmd) return cmd_ablate(ablate_config, seeds, ablate_out, ablate_overrides);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kExitCheckpoint;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
