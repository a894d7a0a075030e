#include "pgx/bptt.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pgx {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void check_batch(const NonlinearEnv& env, const MlpController& ctrl, const RolloutBatch& batch) {
  require(ctrl.input_dim() == env.state_dim(), "controller input does not match the state dim");
  require(ctrl.output_dim() == env.control_dim(),
          "controller output does not match the control dim");
  require(batch.initial.rows() == env.state_dim() && batch.targets.rows() == env.state_dim(),
          "batch states do not match the state dim");
  require(batch.initial.cols() >= 1, "batch is empty");
  require(batch.targets.cols() == batch.initial.cols() &&
              batch.weights.size() == batch.initial.cols(),
          "batch targets/weights do not match the number of initial states");
}

double weighted_stage(const NonlinearEnv& env, const Eigen::MatrixXd& X, const RolloutBatch& b) {
  double c = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    c += b.weights(j) * env.stage_cost(X.col(j), b.targets.col(j));
  return c;
}

}  // namespace

Eigen::VectorXd NonlinearEnv::decoy_target(const Eigen::VectorXd&) const {
  throw std::logic_error("this environment defines no decoy target");
}

RolloutBatch make_batch(const NonlinearEnv& env, const std::vector<Eigen::VectorXd>& X0) {
  require(!X0.empty(), "initial state set is empty");
  const auto n = static_cast<Eigen::Index>(X0.size());
  RolloutBatch b;
  b.initial.resize(env.state_dim(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    require(X0[j].size() == env.state_dim(), "initial state has the wrong dimension");
    b.initial.col(j) = X0[j];
  }
  b.targets = env.target().replicate(1, n);
  b.weights = Eigen::VectorXd::Constant(n, 1.0 / (std::max(env.horizon(), 1) * double(n)));
  return b;
}

RolloutBatch concat(const RolloutBatch& a, const RolloutBatch& b) {
  RolloutBatch c;
  c.initial.resize(a.initial.rows(), a.initial.cols() + b.initial.cols());
  c.initial << a.initial, b.initial;
  c.targets.resize(a.targets.rows(), a.targets.cols() + b.targets.cols());
  c.targets << a.targets, b.targets;
  c.weights.resize(a.weights.size() + b.weights.size());
  c.weights << a.weights, b.weights;
  return c;
}

RolloutResult rollout_cost_grad(const NonlinearEnv& env, const MlpController& ctrl,
                                const RolloutBatch& batch) {
  RolloutResult r;
  rollout_cost_grad(env, ctrl, batch, r);
  return r;
}

void rollout_cost_grad(const NonlinearEnv& env, const MlpController& ctrl,
                       const RolloutBatch& batch, RolloutResult& r) {
  check_batch(env, ctrl, batch);
  const int H = env.horizon();
  const auto B = batch.initial.cols();
  const int n = env.state_dim();

  RolloutTape& tape = r.tape;
  tape.states.resize(H + 1);
  tape.controls.resize(H);
  tape.caches.resize(H);
  tape.jx.resize(H);
  tape.ju.resize(H);
  for (int h = 0; h < H; ++h) {
    tape.jx[h].resize(B);
    tape.ju[h].resize(B);
  }
  tape.states[0] = batch.initial;
  r.cost = weighted_stage(env, tape.states[0], batch);
  for (int h = 0; h < H; ++h) {
    tape.controls[h] = ctrl.forward_batch(tape.states[h], tape.caches[h]);
    if (!tape.controls[h].allFinite()) throw DivergenceError("non-finite control", h);
    tape.states[h + 1].resize(n, B);
    for (Eigen::Index j = 0; j < B; ++j)
      tape.states[h + 1].col(j) = env.step_linearized(tape.states[h].col(j), tape.controls[h].col(j),
                                                      tape.jx[h][j], tape.ju[h][j]);
    if (!tape.states[h + 1].allFinite()) throw DivergenceError("non-finite state", h + 1);
    r.cost += weighted_stage(env, tape.states[h + 1], batch);
  }

  r.grad.setZero(ctrl.param_count());
  Eigen::MatrixXd lam(n, B);
  for (Eigen::Index j = 0; j < B; ++j)
    lam.col(j) = batch.weights(j) * env.stage_cost_grad(tape.states[H].col(j), batch.targets.col(j));
  Eigen::MatrixXd dU(env.control_dim(), B), prev(n, B);
  std::vector<Eigen::MatrixXd> deltas;
  for (int h = H - 1; h >= 0; --h) {
    for (Eigen::Index j = 0; j < B; ++j) {
      dU.col(j) = tape.ju[h][j].transpose() * lam.col(j);
      prev.col(j) = tape.jx[h][j].transpose() * lam.col(j) +
                    batch.weights(j) *
                        env.stage_cost_grad(tape.states[h].col(j), batch.targets.col(j));
    }
    lam = prev + ctrl.backward_deltas(tape.caches[h], dU, deltas);
    ctrl.accumulate_grad(tape.caches[h].inputs, deltas, r.grad);
  }
  if (!std::isfinite(r.cost) || !r.grad.allFinite())
    throw DivergenceError("non-finite cost or gradient", H);
}

RolloutResult rollout_cost_grad(const NonlinearEnv& env, const MlpController& ctrl,
                                const std::vector<Eigen::VectorXd>& X0) {
  return rollout_cost_grad(env, ctrl, make_batch(env, X0));
}

double rollout_cost(const NonlinearEnv& env, const MlpController& ctrl, const RolloutBatch& batch) {
  check_batch(env, ctrl, batch);
  Eigen::MatrixXd X = batch.initial;
  double c = weighted_stage(env, X, batch);
  for (int h = 0; h < env.horizon(); ++h) {
    const Eigen::MatrixXd U = ctrl.forward_batch(X);
    if (!U.allFinite()) throw DivergenceError("non-finite control", h);
    for (Eigen::Index j = 0; j < X.cols(); ++j) X.col(j) = env.step(X.col(j), U.col(j));
    if (!X.allFinite()) throw DivergenceError("non-finite state", h + 1);
    c += weighted_stage(env, X, batch);
  }
  return c;
}

double rollout_cost(const NonlinearEnv& env, const MlpController& ctrl,
                    const std::vector<Eigen::VectorXd>& X0) {
  return rollout_cost(env, ctrl, make_batch(env, X0));
}

std::vector<Eigen::VectorXd> simulate(const NonlinearEnv& env, const MlpController& ctrl,
                                      const Eigen::VectorXd& x0) {
  require(x0.size() == env.state_dim(), "initial state has the wrong dimension");
  std::vector<Eigen::VectorXd> xs{x0};
  for (int h = 0; h < env.horizon(); ++h) xs.push_back(env.step(xs.back(), ctrl.forward(xs.back())));
  return xs;
}

void OptimizerConfig::validate() const {
  require(lr > 0.0 && std::isfinite(lr), "learning rate must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
          "Adam betas must lie in [0, 1)");
  require(epsilon > 0.0, "Adam epsilon must be positive");
  require(stop.min_improve >= 0.0, "min_improve must be nonnegative");
  require(stop.patience_iters >= 1 && stop.max_iters >= 1, "iteration limits must be positive");
}

TrainResult train(const NonlinearEnv& env, const MlpController& initial, const RolloutBatch& batch,
                  const OptimizerConfig& opt) {
  opt.validate();
  MlpController cur = initial;
  TrainResult res{initial, std::numeric_limits<double>::infinity(), 0, {}, 0, false};
  Eigen::VectorXd m = Eigen::VectorXd::Zero(cur.param_count());
  Eigen::VectorXd v = m;
  double ref = std::numeric_limits<double>::infinity();
  long last_improve = 0;
  double b1t = 1.0, b2t = 1.0;

  RolloutResult rr;
  for (long it = 0; it < opt.stop.max_iters; ++it) {
    try {
      rollout_cost_grad(env, cur, batch, rr);
    } catch (const DivergenceError&) {
      throw TrainingDiverged(it, res.best, res.best_cost);
    }
    res.trace.push_back(rr.cost);
    res.iterations = it + 1;
    if (rr.cost < res.best_cost) {
      res.best_cost = rr.cost;
      res.best.params() = cur.params();
      res.best_iteration = it;
    }
    if (rr.cost < ref - opt.stop.min_improve) {
      ref = rr.cost;
      last_improve = it;
    } else if (it - last_improve >= opt.stop.patience_iters) {
      res.hit_patience = true;
      break;
    }
    if (opt.kind == OptimizerKind::gd) {
      cur.params() -= opt.lr * rr.grad;
    } else {
      b1t *= opt.beta1;
      b2t *= opt.beta2;
      m = opt.beta1 * m + (1.0 - opt.beta1) * rr.grad;
      v = opt.beta2 * v + (1.0 - opt.beta2) * rr.grad.cwiseAbs2();
      const Eigen::ArrayXd mhat = m.array() / (1.0 - b1t);
      const Eigen::ArrayXd vhat = v.array() / (1.0 - b2t);
      cur.params().array() -= opt.lr * mhat / (vhat.sqrt() + opt.epsilon);
    }
  }
  return res;
}

}  // namespace pgx
