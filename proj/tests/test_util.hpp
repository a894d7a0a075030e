#pragma once

#include <functional>

#include <Eigen/Dense>

#include "pgx/lqr.hpp"
#include "pgx/rng.hpp"

namespace pgx::test {

// Random full-rank problem with N(0, 1/D) dynamics and a random PSD cost.
inline LinearLqrProblem random_problem(int D, int H, std::uint64_t seed) {
  CounterRng rng(seed);
  const double sd = 1.0 / std::sqrt(static_cast<double>(D));
  Eigen::MatrixXd A = rng.gaussian_matrix(D, D, sd);
  Eigen::MatrixXd B = rng.gaussian_matrix(D, D, sd) + Eigen::MatrixXd::Identity(D, D);
  Eigen::MatrixXd Z = rng.gaussian_matrix(D, D, sd);
  Eigen::MatrixXd Q = Z * Z.transpose() + 0.1 * Eigen::MatrixXd::Identity(D, D);
  Q = 0.5 * (Q + Q.transpose()).eval();
  return LinearLqrProblem(A, B, Q, H);
}

inline StateSet random_states(int D, int n, std::uint64_t seed) {
  CounterRng rng(seed, 7);
  std::vector<Eigen::VectorXd> v;
  for (int i = 0; i < n; ++i) v.push_back(rng.gaussian_vector(D, 1.0));
  return StateSet(v);
}

// Central finite differences of f at M, entry by entry.
inline Eigen::MatrixXd fd_gradient(const std::function<double(const Eigen::MatrixXd&)>& f,
                                   const Eigen::MatrixXd& M, double h = 1e-6) {
  Eigen::MatrixXd g(M.rows(), M.cols());
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      Eigen::MatrixXd p = M, m = M;
      p(i, j) += h;
      m(i, j) -= h;
      g(i, j) = (f(p) - f(m)) / (2.0 * h);
    }
  return g;
}

inline Eigen::VectorXd unit(int D, int d) { return Eigen::VectorXd::Unit(D, d); }

inline StateSet basis_states(int D, std::initializer_list<int> idx) {
  std::vector<Eigen::VectorXd> v;
  for (int d : idx) v.push_back(unit(D, d));
  return StateSet(v);
}

}  // namespace pgx::test
