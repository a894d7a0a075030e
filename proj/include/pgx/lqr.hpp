#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "pgx/errors.hpp"

namespace pgx {

// Finite-horizon LQR with R = 0 and a square, full-rank control matrix:
//   x_{h+1} = (A + B K) x_h,   J(K; X) = (1/|X|) sum_{x0} sum_{h=0}^{H} x_h' Q x_h.
class LinearLqrProblem {
 public:
  LinearLqrProblem(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd Q, int horizon);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  const Eigen::MatrixXd& Q() const { return Q_; }
  int horizon() const { return horizon_; }
  int dim() const { return static_cast<int>(A_.rows()); }
  bool b_orthogonal() const { return b_orthogonal_; }

  // Same system and cost with a different horizon.
  LinearLqrProblem with_horizon(int horizon) const;

  // Solves B Y = rhs.
  Eigen::MatrixXd solve_b(const Eigen::MatrixXd& rhs) const;

 private:
  Eigen::MatrixXd A_, B_, Q_;
  int horizon_;
  bool b_orthogonal_;
  Eigen::PartialPivLU<Eigen::MatrixXd> b_lu_;
};

struct Controller {
  Eigen::MatrixXd K;

  static Controller zero(int dim) { return {Eigen::MatrixXd::Zero(dim, dim)}; }
};

class StateSet {
 public:
  StateSet() = default;
  explicit StateSet(std::vector<Eigen::VectorXd> states);
  // One state per column.
  static StateSet from_columns(const Eigen::MatrixXd& columns);

  std::size_t size() const { return states_.size(); }
  bool empty() const { return states_.empty(); }
  int dim() const { return states_.empty() ? 0 : static_cast<int>(states_.front().size()); }
  const Eigen::VectorXd& operator[](std::size_t i) const { return states_[i]; }
  const std::vector<Eigen::VectorXd>& states() const { return states_; }
  const std::vector<double>& norms() const { return norms_; }

  Eigen::MatrixXd as_matrix() const;
  bool is_orthonormal(double tol = 1e-10) const;

 private:
  std::vector<Eigen::VectorXd> states_;
  std::vector<double> norms_;
};

struct PgConfig {
  double eta = 1e-3;
  long max_iters = 100000;
  double tol = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PgResult {
  Controller controller;
  // J(K^(t); X) for t = 1, 2, ..., final.
  std::vector<double> trace;
  long iterations = 0;  // gradient steps taken
  bool converged = false;
};

// Observer called with (t, K^(t)) for every iterate, including K^(1) = 0.
using PgObserver = std::function<void(long, const Eigen::MatrixXd&)>;

std::vector<Eigen::VectorXd> rollout(const LinearLqrProblem& problem, const Controller& K,
                                     const Eigen::VectorXd& x0);
double cost(const LinearLqrProblem& problem, const Controller& K, const StateSet& X);
double cost_minimum(const LinearLqrProblem& problem, const StateSet& X);
Eigen::MatrixXd cost_gradient(const LinearLqrProblem& problem, const Controller& K,
                              const StateSet& X);
PgResult policy_gradient(const LinearLqrProblem& problem, const StateSet& X, const PgConfig& cfg,
                         const PgObserver& observer = {});

}  // namespace pgx
