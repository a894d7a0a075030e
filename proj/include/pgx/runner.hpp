#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pgx/gallery.hpp"
#include "pgx/nonlinear.hpp"

namespace pgx {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { lqr_family, shift_oracle, mc_thm5, pendulum, quadcopter, minnorm_check };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

// Command-line overrides applied on top of a config file.
struct RunOptions {
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<long> trials;
  bool slow = false;
};

struct LqrFamilyConfig {
  std::vector<FamilyKind> families;
  int D = 5;
  int H = 5;
  double eta = 1e-3;
  long max_iters = 100000;
  double tol = 1e-8;
  int n_train = 1;  // S = first n_train standard basis vectors
  int n_seeds = 20;
};

struct OracleCase {
  int D = 2;
  int H = 2;
  std::optional<Eigen::VectorXd> q_diag;
};

struct ShiftOracleConfig {
  std::vector<OracleCase> cases;
  double k_tol = 1e-10;
  double ratio_tol = 1e-9;
};

struct McConfig {
  std::vector<std::pair<int, int>> grid;  // (D, H)
  long n_trials = 50000;
  std::optional<double> eta;  // default: thm5_eta_max(D, H)
  bool high_prob = false;
  int high_prob_H = 2;
  double high_prob_delta = 0.5;
  long high_prob_trials = 20;
};

struct NonlinearConfig {
  NetSpec net;
  OptimizerConfig pg_opt;
  OptimizerConfig adv_opt;
  OptimizerConfig jstar_opt;
  double lambda = 0.1;
  int n_seeds = 5;
  int n_adv_seeds = 5;
  int n_jstar_runs = 5;
  int horizon = 0;
  std::vector<Eigen::VectorXd> train_states;
  std::vector<Eigen::VectorXd> unseen_states;
  bool write_params = true;
};

struct MinnormConfig {
  std::vector<std::pair<int, int>> shift_grid;
  int random_D = 5;
  int random_H = 5;
  int n_random = 10;
  double eta = 1e-3;
  long max_iters = 100000;
  double tol = 1e-12;
  double match_tol = 1e-9;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::lqr_family;
  std::uint64_t seed = 0;
  std::string effective_json;  // full config after defaults and overrides

  LqrFamilyConfig lqr;
  ShiftOracleConfig oracle;
  McConfig mc;
  NonlinearConfig nonlinear;
  MinnormConfig minnorm;
};

// Parses and validates a JSON config; missing fields take defaults. Errors name
// the offending field or the line/column of a syntax error.
ExperimentConfig parse_config(const std::string& text, const RunOptions& opts);
ExperimentConfig load_config(const std::filesystem::path& path, const RunOptions& opts);
ExperimentConfig default_config(ExperimentKind kind, const RunOptions& opts);

enum ExitCode : int { kOk = 0, kConfigError = 1, kDivergence = 2, kAcceptanceFailure = 3 };

struct RunResult {
  int exit_code = kOk;
  std::vector<std::filesystem::path> outputs;
  std::vector<std::string> notes;
};

RunResult run(const ExperimentConfig& cfg, const RunOptions& opts);

// Linear interpolation between order statistics at position p (n - 1).
double percentile(std::vector<double> values, double p);

// Groups rows by the non-numeric columns (or `group_by` when given) and writes
// n plus median, q25, q75 of every other column.
void summarize(const std::vector<std::filesystem::path>& inputs,
               const std::filesystem::path& output,
               const std::vector<std::string>& group_by = {});

}  // namespace pgx
