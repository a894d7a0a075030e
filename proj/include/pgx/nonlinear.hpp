#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "pgx/bptt.hpp"
#include "pgx/envs.hpp"

namespace pgx {

using Trajectory = std::vector<Eigen::VectorXd>;

// (1/(H |X|)) sum_X sum_{h=0}^{H} stage(x_h, target).
double env_cost(const NonlinearEnv& env, const std::vector<Trajectory>& trajectories,
                const std::optional<Eigen::VectorXd>& target_override = std::nullopt);
double env_cost(const NonlinearEnv& env, const Trajectory& trajectory,
                const std::optional<Eigen::VectorXd>& target_override = std::nullopt);

struct AdversarialObjective {
  double lambda = 0.1;
  // Unseen initial state -> decoy target.
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> adversarial_targets;

  // Decoys from env.decoy_target for every state of U.
  static AdversarialObjective for_env(const NonlinearEnv& env, const std::vector<Eigen::VectorXd>& U,
                                      double lambda = 0.1);
  Eigen::VectorXd decoy_for(const Eigen::VectorXd& x0) const;
};

// Batch whose cost is J(w; S) + lambda (1/(H |U|)) sum_U cost to the decoys.
RolloutBatch adversarial_batch(const NonlinearEnv& env, const std::vector<Eigen::VectorXd>& S,
                               const std::vector<Eigen::VectorXd>& U,
                               const AdversarialObjective& obj);
double adversarial_cost(const NonlinearEnv& env, const MlpController& ctrl,
                        const std::vector<Eigen::VectorXd>& S,
                        const std::vector<Eigen::VectorXd>& U, const AdversarialObjective& obj);

struct NormalizedMeasure {
  double value = 0.0;  // NaN when degenerate
  double numerator = 0.0;
  double denominator = 0.0;
  bool degenerate = false;
};

// (J(w; U) - J*) / (J(w_no_ext; U) - J*); degenerate if the denominator is at most 1e-12.
NormalizedMeasure normalized_cost_measure(const NonlinearEnv& env, const MlpController& ctrl,
                                          const MlpController& ctrl_no_ext,
                                          const std::vector<Eigen::VectorXd>& U, double j_star);

struct NetSpec {
  int depth = 4;  // number of affine layers
  int width = 50;
};

// Input = state dim, output = control dim, env's output transform.
MlpController make_controller(const NonlinearEnv& env, const NetSpec& net, std::uint64_t seed);

TrainResult train_controller(const NonlinearEnv& env, const RolloutBatch& batch, const NetSpec& net,
                             const OptimizerConfig& opt, std::uint64_t seed);

struct JStarEstimate {
  double value = 0.0;
  std::vector<double> per_run;  // NaN for diverged runs
};

// Minimum cost over U across n_runs controllers trained on U with seeds
// derived from `seed`. Throws if every run diverges.
JStarEstimate estimate_j_star(const NonlinearEnv& env, const std::vector<Eigen::VectorXd>& U,
                              int n_runs, std::uint64_t seed, const NetSpec& net,
                              const OptimizerConfig& opt);

OptimizerConfig gd_protocol(double lr = 5e-4);
OptimizerConfig adam_protocol(double lr = 3e-4);

// One state per line, comma-separated doubles. Blank lines and lines starting
// with '#' are skipped.
std::vector<Eigen::VectorXd> load_state_table(const std::filesystem::path& path);
void save_state_table(const std::filesystem::path& path, const std::vector<Eigen::VectorXd>& states);

}  // namespace pgx
