// Command-line front end: one subcommand per experiment plus `summarize`.
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "pgx/errors.hpp"
#include "pgx/runner.hpp"

namespace {

using pgx::ExperimentKind;

const std::map<std::string, ExperimentKind> kSubcommands = {
    {"lqr", ExperimentKind::lqr_family},     {"oracle-check", ExperimentKind::shift_oracle},
    {"mc", ExperimentKind::mc_thm5},         {"pendulum", ExperimentKind::pendulum},
    {"quadcopter", ExperimentKind::quadcopter}, {"minnorm", ExperimentKind::minnorm_check}};

int run_experiment(ExperimentKind kind, const std::string& config_path,
                   const pgx::RunOptions& opts) {
  const pgx::ExperimentConfig cfg = config_path.empty() ? pgx::default_config(kind, opts)
                                                        : pgx::load_config(config_path, opts);
  if (cfg.kind != kind)
    throw pgx::ConfigError("config describes experiment '" + pgx::to_string(cfg.kind) +
                           "' but the subcommand runs '" + pgx::to_string(kind) + "'");
  const pgx::RunResult res = pgx::run(cfg, opts);
  for (const auto& p : res.outputs) std::cout << "wrote " << p.string() << "\n";
  for (const auto& n : res.notes) std::cerr << "check failed: " << n << "\n";
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy gradient extrapolation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  long trials = 0;
  bool slow = false;
  for (const auto& [name, kind] : kSubcommands) {
    CLI::App* sub = app.add_subcommand(name, "Run the " + pgx::to_string(kind) + " experiment");
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--trials", trials, "Number of seeds or trials (overrides the config)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--slow", slow, "Also run the high-dimensional Monte-Carlo check");
  }
  CLI::App* sum = app.add_subcommand("summarize", "Median and quartiles of CSV columns by group");
  std::vector<std::string> inputs;
  std::string sum_out;
  std::vector<std::string> group_by;
  sum->add_option("inputs", inputs, "Input CSV files")->required()->check(CLI::ExistingFile);
  sum->add_option("--out", sum_out, "Output CSV path")->required();
  sum->add_option("--group-by", group_by, "Grouping columns (default: non-numeric columns)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pgx::kConfigError;
  }

  try {
    if (sum->parsed()) {
      std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
      pgx::summarize(paths, sum_out, group_by);
      std::cout << "wrote " << sum_out << "\n";
      return pgx::kOk;
    }
    for (const auto& [name, kind] : kSubcommands) {
      CLI::App* sub = app.get_subcommand(name);
      if (!sub->parsed()) continue;
      pgx::RunOptions opts;
      opts.out_dir = out_dir;
      if (sub->count("--seed")) opts.seed = seed;
      if (sub->count("--trials")) opts.trials = trials;
      opts.slow = slow;
      return run_experiment(kind, config_path, opts);
    }
  } catch (const pgx::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return pgx::kConfigError;
  } catch (const pgx::DivergenceError& e) {
    std::cerr << "diverged at index " << e.index() << ": " << e.what() << "\n";
    return pgx::kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pgx::kConfigError;
  }
  return pgx::kConfigError;
}
