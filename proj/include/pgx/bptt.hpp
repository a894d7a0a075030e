#pragma once

#include <cstdint>
#include <vector>

#include "pgx/env.hpp"
#include "pgx/errors.hpp"
#include "pgx/mlp.hpp"

namespace pgx {

// Initial states (columns), their targets, and per-state weights. The cost is
// sum_b weight_b * sum_{h=0}^{H} stage(x_h^b, target_b).
struct RolloutBatch {
  Eigen::MatrixXd initial;
  Eigen::MatrixXd targets;
  Eigen::VectorXd weights;
};

// The env's own target and weights 1/(H |X|) (H = 0 is treated as 1).
RolloutBatch make_batch(const NonlinearEnv& env, const std::vector<Eigen::VectorXd>& X0);
// Concatenates batches.
RolloutBatch concat(const RolloutBatch& a, const RolloutBatch& b);

struct RolloutTape {
  std::vector<Eigen::MatrixXd> states;    // H + 1 entries, n x B
  std::vector<Eigen::MatrixXd> controls;  // H entries, m x B
  std::vector<MlpCache> caches;           // H entries
  std::vector<std::vector<Eigen::MatrixXd>> jx, ju;  // [h][b]
};

struct RolloutResult {
  double cost = 0.0;
  Eigen::VectorXd grad;
  RolloutTape tape;
};

RolloutResult rollout_cost_grad(const NonlinearEnv& env, const MlpController& ctrl,
                                const RolloutBatch& batch);
// Same, reusing the buffers already held by `out`.
void rollout_cost_grad(const NonlinearEnv& env, const MlpController& ctrl,
                       const RolloutBatch& batch, RolloutResult& out);
RolloutResult rollout_cost_grad(const NonlinearEnv& env, const MlpController& ctrl,
                                const std::vector<Eigen::VectorXd>& X0);
double rollout_cost(const NonlinearEnv& env, const MlpController& ctrl, const RolloutBatch& batch);
double rollout_cost(const NonlinearEnv& env, const MlpController& ctrl,
                    const std::vector<Eigen::VectorXd>& X0);
// States x_0 ... x_H under the controller.
std::vector<Eigen::VectorXd> simulate(const NonlinearEnv& env, const MlpController& ctrl,
                                      const Eigen::VectorXd& x0);

enum class OptimizerKind { gd, adam };

struct StopRule {
  double min_improve = 1e-5;
  long patience_iters = 5000;
  long max_iters = 75000;
};

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::gd;
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  StopRule stop;

  void validate() const;
};

struct TrainResult {
  MlpController best;
  double best_cost = 0.0;
  long best_iteration = 0;
  std::vector<double> trace;  // objective before each update
  long iterations = 0;
  bool hit_patience = false;
};

class TrainingDiverged : public DivergenceError {
 public:
  TrainingDiverged(long iteration, MlpController best, double best_cost)
      : DivergenceError("training diverged", iteration),
        best_(std::move(best)),
        best_cost_(best_cost) {}
  const MlpController& best_so_far() const { return best_; }
  double best_cost() const { return best_cost_; }

 private:
  MlpController best_;
  double best_cost_;
};

// Full-batch GD or Adam on rollout_cost_grad; returns the parameters with the
// lowest recorded objective.
TrainResult train(const NonlinearEnv& env, const MlpController& initial, const RolloutBatch& batch,
                  const OptimizerConfig& opt);

}  // namespace pgx
