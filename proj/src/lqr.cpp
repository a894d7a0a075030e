#include "pgx/lqr.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pgx {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void check_controller(const LinearLqrProblem& p, const Controller& K) {
  require(K.K.rows() == p.dim() && K.K.cols() == p.dim(),
          "controller is " + std::to_string(K.K.rows()) + "x" + std::to_string(K.K.cols()) +
              ", problem has D=" + std::to_string(p.dim()));
}

void check_states(const LinearLqrProblem& p, const StateSet& X) {
  require(!X.empty(), "state set is empty");
  require(X.dim() == p.dim(), "state dimension " + std::to_string(X.dim()) +
                                  " does not match D=" + std::to_string(p.dim()));
}

// Closed-loop powers M^0, ..., M^H by repeated multiplication.
std::vector<Eigen::MatrixXd> closed_loop_powers(const LinearLqrProblem& p, const Eigen::MatrixXd& K) {
  const Eigen::MatrixXd M = p.A() + p.B() * K;
  std::vector<Eigen::MatrixXd> pw(p.horizon() + 1);
  pw[0] = Eigen::MatrixXd::Identity(p.dim(), p.dim());
  for (int s = 1; s <= p.horizon(); ++s) pw[s] = M * pw[s - 1];
  return pw;
}

double cost_from_powers(const LinearLqrProblem& p, const std::vector<Eigen::MatrixXd>& pw,
                        const Eigen::MatrixXd& X) {
  double total = 0.0;
  for (const auto& P : pw) {
    const Eigen::MatrixXd Xh = P * X;
    total += Xh.cwiseProduct(p.Q() * Xh).sum();
  }
  return total / static_cast<double>(X.cols());
}

Eigen::MatrixXd gradient_from_powers(const LinearLqrProblem& p,
                                     const std::vector<Eigen::MatrixXd>& pw,
                                     const Eigen::MatrixXd& X) {
  const int H = p.horizon();
  const double inv_n = 1.0 / static_cast<double>(X.cols());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(p.dim(), p.dim());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p.dim(), p.dim());
  // G_h = sum_{s=1}^{H-h} (M^{s-1})' Q M^s, accumulated from h = H-1 downward.
  for (int h = H - 1; h >= 0; --h) {
    const int s = H - h;
    G.noalias() += pw[s - 1].transpose() * p.Q() * pw[s];
    const Eigen::MatrixXd Xh = pw[h] * X;
    acc.noalias() += G * (Xh * Xh.transpose()) * inv_n;
  }
  return 2.0 * p.B().transpose() * acc;
}

}  // namespace

LinearLqrProblem::LinearLqrProblem(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd Q,
                                   int horizon)
    : A_(std::move(A)), B_(std::move(B)), Q_(std::move(Q)), horizon_(horizon) {
  const auto D = A_.rows();
  require(D >= 2, "D must be at least 2");
  require(A_.cols() == D && B_.rows() == D && B_.cols() == D && Q_.rows() == D && Q_.cols() == D,
          "A, B, Q must be square with identical dimension");
  require(horizon_ >= 1, "horizon must be at least 1");
  require(A_.allFinite() && B_.allFinite() && Q_.allFinite(), "non-finite system matrix");
  const double qscale = std::max(1.0, Q_.cwiseAbs().maxCoeff());
  require((Q_ - Q_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * qscale, "Q is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Q_, Eigen::EigenvaluesOnly);
  require(eig.eigenvalues().minCoeff() >= -1e-10, "Q is not positive semidefinite");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B_);
  require(svd.singularValues().minCoeff() > 1e-12, "B is not full rank");
  b_orthogonal_ =
      (B_.transpose() * B_ - Eigen::MatrixXd::Identity(D, D)).norm() <= 1e-10;
  b_lu_.compute(B_);
}

LinearLqrProblem LinearLqrProblem::with_horizon(int horizon) const {
  return LinearLqrProblem(A_, B_, Q_, horizon);
}

Eigen::MatrixXd LinearLqrProblem::solve_b(const Eigen::MatrixXd& rhs) const {
  return b_lu_.solve(rhs);
}

StateSet::StateSet(std::vector<Eigen::VectorXd> states) : states_(std::move(states)) {
  norms_.reserve(states_.size());
  for (const auto& s : states_) {
    require(s.size() == states_.front().size(), "states have different dimensions");
    const double n = s.norm();
    require(n > 0.0 && std::isfinite(n), "states must be nonzero and finite");
    norms_.push_back(n);
  }
}

StateSet StateSet::from_columns(const Eigen::MatrixXd& columns) {
  std::vector<Eigen::VectorXd> v;
  for (Eigen::Index j = 0; j < columns.cols(); ++j) v.emplace_back(columns.col(j));
  return StateSet(std::move(v));
}

Eigen::MatrixXd StateSet::as_matrix() const {
  Eigen::MatrixXd m(dim(), static_cast<Eigen::Index>(size()));
  for (std::size_t j = 0; j < size(); ++j) m.col(static_cast<Eigen::Index>(j)) = states_[j];
  return m;
}

bool StateSet::is_orthonormal(double tol) const {
  const Eigen::MatrixXd m = as_matrix();
  const Eigen::MatrixXd gram = m.transpose() * m;
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <= tol;
}

void PgConfig::validate() const {
  require(eta > 0.0 && std::isfinite(eta), "eta must be positive");
  require(max_iters >= 1, "max_iters must be at least 1");
  require(tol >= 0.0, "tol must be nonnegative");
}

std::vector<Eigen::VectorXd> rollout(const LinearLqrProblem& problem, const Controller& K,
                                     const Eigen::VectorXd& x0) {
  check_controller(problem, K);
  require(x0.size() == problem.dim(), "x0 dimension does not match D");
  const Eigen::MatrixXd M = problem.A() + problem.B() * K.K;
  std::vector<Eigen::VectorXd> xs;
  xs.reserve(problem.horizon() + 1);
  xs.push_back(x0);
  for (int h = 1; h <= problem.horizon(); ++h) xs.push_back(M * xs.back());
  return xs;
}

double cost(const LinearLqrProblem& problem, const Controller& K, const StateSet& X) {
  check_controller(problem, K);
  check_states(problem, X);
  return cost_from_powers(problem, closed_loop_powers(problem, K.K), X.as_matrix());
}

double cost_minimum(const LinearLqrProblem& problem, const StateSet& X) {
  check_states(problem, X);
  const Eigen::MatrixXd m = X.as_matrix();
  return m.cwiseProduct(problem.Q() * m).sum() / static_cast<double>(m.cols());
}

Eigen::MatrixXd cost_gradient(const LinearLqrProblem& problem, const Controller& K,
                              const StateSet& X) {
  check_controller(problem, K);
  check_states(problem, X);
  return gradient_from_powers(problem, closed_loop_powers(problem, K.K), X.as_matrix());
}

PgResult policy_gradient(const LinearLqrProblem& problem, const StateSet& X, const PgConfig& cfg,
                         const PgObserver& observer) {
  cfg.validate();
  check_states(problem, X);
  const Eigen::MatrixXd Xm = X.as_matrix();
  const double j_star = cost_minimum(problem, X);

  PgResult out;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(problem.dim(), problem.dim());
  for (long t = 1;; ++t) {
    const auto pw = closed_loop_powers(problem, K);
    const double J = cost_from_powers(problem, pw, Xm);
    if (!std::isfinite(J) || !K.allFinite())
      throw DivergenceError("policy gradient diverged", t);
    out.trace.push_back(J);
    if (observer) observer(t, K);
    if (J - j_star <= cfg.tol) {
      out.converged = true;
      break;
    }
    if (out.iterations >= cfg.max_iters) break;
    K -= cfg.eta * gradient_from_powers(problem, pw, Xm);
    ++out.iterations;
  }
  out.controller = {K};
  return out;
}

}  // namespace pgx
