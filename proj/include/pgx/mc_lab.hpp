#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pgx/lqr.hpp"

namespace pgx {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long n_trials = 0;
  std::uint64_t seed = 0;
};

// n!! for odd n >= 1; throws if n is even or the product overflows 128 bits.
unsigned __int128 double_factorial(int n);

double thm5_eta_max(int D, int H);
double high_prob_eta_max(int D, int H);
// Smallest D admitted by the high-probability statement: |S| + 6|S|H(H-1)(4H-1)!!/delta.
double high_prob_min_dim(int H, int n_train, double delta);

// <grad E_opt(0; U), grad J(0; S)> with the generic analytic gradients.
double grad_inner_product(const LinearLqrProblem& problem, const StateSet& S, const StateSet& U);

// One draw of the random-system experiment: B = Q = I, S = {e_1}, U = S-perp.
struct AlignmentTrial {
  double e_opt_step = 0.0;      // E_opt(K^(2))
  double e_opt_baseline = 0.0;  // E_opt(K_no_ext) = E_opt(0)
  double inner_product = 0.0;
  // E_opt(K^(2)) - E_opt(0) from the exact quadratic expansion.
  double e_opt_delta = 0.0;
  double grad_sq_norm = 0.0;  // ||grad J(0; S)||_F^2
};

// Evaluated with matrix-vector products only, so D in the thousands is cheap.
AlignmentTrial alignment_trial(const Eigen::MatrixXd& A, int H, double eta);

struct McRecord {
  McEstimate ratio_of_means;       // mean E_opt(K^(2)) / mean E_opt(K_no_ext)
  McEstimate ratio_gap;            // mean of deltas / mean E_opt(K_no_ext)
  McEstimate inner_product;
  McEstimate e_opt_baseline_mean;
  McEstimate e_opt_step_mean;
  long n_excluded = 0;
};

// Trial i draws A with N(0, 1/D) entries from seed mix_seed(seed, i).
McRecord mc_thm5(int D, int H, double eta, long n_trials, std::uint64_t seed);

struct HighProbRecord {
  int D = 0;
  double eta = 0.0;
  double threshold = 0.0;  // eta H (H-1) / (4D)
  long n_trials = 0;
  long n_satisfied = 0;    // trials with 1 - ratio >= threshold
  double delta = 0.0;
};

// High-probability branch at D = ceil(high_prob_min_dim(H, 1, delta)).
HighProbRecord mc_high_prob(int H, double delta, long n_trials, std::uint64_t seed);

// Pairwise (cascade) summation; result is independent of thread schedule.
double pairwise_sum(std::span<const double> xs);
McEstimate mean_estimate(std::span<const double> xs, std::uint64_t seed);
// Ratio of sample means with a delta-method standard error.
McEstimate ratio_estimate(std::span<const double> num, std::span<const double> den,
                          std::uint64_t seed);

}  // namespace pgx
