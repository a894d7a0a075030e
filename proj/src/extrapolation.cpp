#include "pgx/extrapolation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pgx/rng.hpp"

namespace pgx {

namespace {

constexpr double kDropTol = 1e-8;
constexpr double kDegenerate = 1e-12;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Appends the normalized part of v orthogonal to `basis`, unless that part is
// negligible. Returns whether v was kept.
bool gram_schmidt_push(std::vector<Eigen::VectorXd>& basis, Eigen::VectorXd v) {
  const double scale = v.norm();
  if (scale == 0.0) return false;
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : basis) v -= q.dot(v) * q;
  const double n = v.norm();
  if (n < kDropTol * std::max(1.0, scale)) return false;
  basis.push_back(v / n);
  return true;
}

StateSet complement_from(const StateSet& S, int D, const std::vector<Eigen::VectorXd>& candidates) {
  require(!S.empty(), "S is empty");
  require(S.dim() == D, "S dimension does not match D");
  std::vector<Eigen::VectorXd> basis;
  for (const auto& s : S.states()) gram_schmidt_push(basis, s);
  const std::size_t r = basis.size();
  require(r < static_cast<std::size_t>(D), "problem not underdetermined");
  for (const auto& c : candidates) {
    if (basis.size() == static_cast<std::size_t>(D)) break;
    gram_schmidt_push(basis, c);
  }
  require(basis.size() == static_cast<std::size_t>(D), "could not complete the basis");
  return StateSet(std::vector<Eigen::VectorXd>(basis.begin() + static_cast<long>(r), basis.end()));
}

void check_u(const LinearLqrProblem& p, const StateSet& U) {
  require(!U.empty(), "U is empty");
  require(U.dim() == p.dim(), "U dimension does not match D");
  require(U.is_orthonormal(1e-10), "U is not orthonormal");
}

double ratio(double value, double baseline, bool& degenerate) {
  degenerate = !(baseline > kDegenerate);
  return degenerate ? std::numeric_limits<double>::quiet_NaN() : value / baseline;
}

}  // namespace

Eigen::MatrixXd span_basis(const StateSet& S) {
  std::vector<Eigen::VectorXd> basis;
  for (const auto& s : S.states()) gram_schmidt_push(basis, s);
  Eigen::MatrixXd m(S.dim(), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = basis[j];
  return m;
}

StateSet orthonormal_complement(const StateSet& S, int D) {
  std::vector<Eigen::VectorXd> canon;
  for (int d = 0; d < D; ++d) canon.push_back(Eigen::VectorXd::Unit(D, d));
  return complement_from(S, D, canon);
}

StateSet orthonormal_complement_random(const StateSet& S, int D, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<Eigen::VectorXd> cands;
  for (int d = 0; d < 2 * D; ++d) cands.push_back(rng.gaussian_vector(D, 1.0));
  return complement_from(S, D, cands);
}

double e_opt(const LinearLqrProblem& problem, const Controller& K, const StateSet& U) {
  check_u(problem, U);
  const Eigen::MatrixXd Y = (problem.A() + problem.B() * K.K) * U.as_matrix();
  return Y.cwiseProduct(problem.Q() * Y).sum() / static_cast<double>(U.size());
}

double e_cost(const LinearLqrProblem& problem, const Controller& K, const StateSet& U) {
  check_u(problem, U);
  return cost(problem, K, U) - cost_minimum(problem, U);
}

Eigen::MatrixXd e_opt_gradient(const LinearLqrProblem& problem, const Controller& K,
                               const StateSet& U) {
  check_u(problem, U);
  const Eigen::MatrixXd V = U.as_matrix();
  const Eigen::MatrixXd M = problem.A() + problem.B() * K.K;
  return 2.0 * problem.B().transpose() * problem.Q() * M * (V * V.transpose()) /
         static_cast<double>(U.size());
}

Controller k_ext(const LinearLqrProblem& problem) { return {-problem.solve_b(problem.A())}; }

Controller k_no_ext(const LinearLqrProblem& problem, const StateSet& S, const StateSet& U) {
  require(S.dim() == problem.dim() && U.dim() == problem.dim(), "state dimension mismatch");
  const Eigen::MatrixXd Sb = span_basis(S);
  const int D = problem.dim();
  require(Sb.cols() + static_cast<Eigen::Index>(U.size()) == D,
          "S and U do not form a basis of R^D");
  Eigen::MatrixXd C(D, D);
  C << Sb, U.as_matrix();
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(D, D);
  Y.leftCols(Sb.cols()) = -problem.solve_b(problem.A() * Sb);
  // K C = Y  <=>  C' K' = Y'.
  Eigen::FullPivLU<Eigen::MatrixXd> lu(C.transpose());
  require(lu.rank() == D, "singular combined basis");
  return {lu.solve(Y.transpose()).transpose()};
}

Controller min_norm_minimizer(const LinearLqrProblem& problem, const StateSet& S) {
  require(!S.empty() && S.dim() == problem.dim(), "S dimension mismatch");
  const Eigen::MatrixXd Sm = S.as_matrix();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Sm);
  qr.setThreshold(1e-10);
  const auto r = qr.rank();
  Eigen::MatrixXd basis(Sm.rows(), r);
  for (Eigen::Index j = 0; j < r; ++j) basis.col(j) = Sm.col(qr.colsPermutation().indices()(j));
  const Eigen::MatrixXd pinv = basis.completeOrthogonalDecomposition().pseudoInverse();
  return {-problem.solve_b(problem.A() * basis) * pinv};
}

double norm_gap(const LinearLqrProblem& problem, const Controller& K_pg, const StateSet& S) {
  const double j_star = cost_minimum(problem, S);
  require(cost(problem, K_pg, S) - j_star <= 1e-8 * std::max(1.0, j_star),
          "K_pg does not minimize the training cost");
  return K_pg.K.squaredNorm() - min_norm_minimizer(problem, S).K.squaredNorm();
}

ExtrapolationReport evaluate_extrapolation(const LinearLqrProblem& problem, const Controller& K,
                                           const Controller& baseline, const StateSet& U) {
  ExtrapolationReport r;
  r.e_opt = e_opt(problem, K, U);
  r.e_cost = e_cost(problem, K, U);
  r.e_opt_baseline = e_opt(problem, baseline, U);
  r.e_cost_baseline = e_cost(problem, baseline, U);
  r.ratio_opt = ratio(r.e_opt, r.e_opt_baseline, r.opt_degenerate);
  r.ratio_cost = ratio(r.e_cost, r.e_cost_baseline, r.cost_degenerate);
  return r;
}

ExtrapolationReport evaluate_extrapolation(const LinearLqrProblem& problem, const Controller& K,
                                           const StateSet& S, const StateSet& U) {
  return evaluate_extrapolation(problem, K, k_no_ext(problem, S, U), U);
}

}  // namespace pgx
