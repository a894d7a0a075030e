#pragma once

#include <cstdint>

#include "pgx/lqr.hpp"

namespace pgx {

struct ExtrapolationReport {
  double e_opt = 0.0;
  double e_cost = 0.0;
  double e_opt_baseline = 0.0;
  double e_cost_baseline = 0.0;
  // NaN when the corresponding baseline is at most 1e-12; see the flags.
  double ratio_opt = 0.0;
  double ratio_cost = 0.0;
  bool opt_degenerate = false;
  bool cost_degenerate = false;
};

// Orthonormal basis of span(S), by two-pass Gram-Schmidt. Columns of the result.
Eigen::MatrixXd span_basis(const StateSet& S);

// Orthonormal basis of the orthogonal complement of span(S) in R^D, obtained by
// Gram-Schmidt on [S | e_1 ... e_D]. Throws if S spans R^D.
StateSet orthonormal_complement(const StateSet& S, int D);
// Same, but completing with Gaussian vectors drawn from `seed`; gives a second,
// independently oriented basis of the same subspace.
StateSet orthonormal_complement_random(const StateSet& S, int D, std::uint64_t seed);

// Optimality measure: (1/|U|) sum_v ||(A + B K) v||_Q^2.
double e_opt(const LinearLqrProblem& problem, const Controller& K, const StateSet& U);
// Cost measure: J(K; U) - J*(U).
double e_cost(const LinearLqrProblem& problem, const Controller& K, const StateSet& U);
// Gradient of e_opt with respect to K.
Eigen::MatrixXd e_opt_gradient(const LinearLqrProblem& problem, const Controller& K,
                               const StateSet& U);

Controller k_ext(const LinearLqrProblem& problem);
Controller k_no_ext(const LinearLqrProblem& problem, const StateSet& S, const StateSet& U);
Controller min_norm_minimizer(const LinearLqrProblem& problem, const StateSet& S);
// ||K_pg||_F^2 - ||K_min||_F^2; K_pg must minimize the training cost to within 1e-8.
double norm_gap(const LinearLqrProblem& problem, const Controller& K_pg, const StateSet& S);

ExtrapolationReport evaluate_extrapolation(const LinearLqrProblem& problem, const Controller& K,
                                           const Controller& baseline, const StateSet& U);
// Baseline is k_no_ext(problem, S, U).
ExtrapolationReport evaluate_extrapolation(const LinearLqrProblem& problem, const Controller& K,
                                           const StateSet& S, const StateSet& U);

}  // namespace pgx
