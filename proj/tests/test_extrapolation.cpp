#include <gtest/gtest.h>

#include <cmath>

#include "pgx/extrapolation.hpp"
#include "test_util.hpp"

namespace pgx {
namespace {

using test::basis_states;
using test::random_problem;

double brute_e_opt(const LinearLqrProblem& p, const Eigen::MatrixXd& K, const StateSet& U) {
  double s = 0.0;
  for (const auto& v : U.states()) {
    const Eigen::VectorXd y = (p.A() + p.B() * K) * v;
    s += y.dot(p.Q() * y);
  }
  return s / static_cast<double>(U.size());
}

// Minimizer of the training cost that is zero on span(S)-perp, for orthonormal S.
Eigen::MatrixXd brute_k_no_ext(const LinearLqrProblem& p, const StateSet& S) {
  const Eigen::MatrixXd M = S.as_matrix();
  return -p.B().fullPivLu().solve(p.A() * M * M.transpose());
}

TEST(SpanBasis, OrthonormalAndDropsDependentStates) {
  const StateSet S({Eigen::Vector3d(1, 1, 0), Eigen::Vector3d(2, 2, 0), Eigen::Vector3d(0, 1, 1)});
  const Eigen::MatrixXd Bs = span_basis(S);
  ASSERT_EQ(Bs.cols(), 2);
  EXPECT_LE((Bs.transpose() * Bs - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-14);
  for (const auto& x : S.states()) EXPECT_LE((x - Bs * (Bs.transpose() * x)).norm(), 1e-12);
}

TEST(OrthonormalComplement, ThrowsWhenFullRank) {
  EXPECT_THROW(orthonormal_complement(basis_states(2, {0, 1}), 2), std::invalid_argument);
  const StateSet U = orthonormal_complement(StateSet({Eigen::Vector3d(1, 1, 1)}), 3);
  EXPECT_EQ(U.size(), 2u);
  EXPECT_TRUE(U.is_orthonormal());
  for (const auto& u : U.states()) EXPECT_NEAR(u.sum(), 0.0, 1e-14);
}

TEST(Measures, BasisInvariance) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const int D = 3 + static_cast<int>(s % 4);
    const auto p = random_problem(D, 3, 40 + s);
    const StateSet S = test::random_states(D, 1 + static_cast<int>(s % 2), 90 + s);
    const StateSet U1 = orthonormal_complement(S, D);
    const StateSet U2 = orthonormal_complement_random(S, D, 1234 + s);
    ASSERT_TRUE(U2.is_orthonormal());
    ASSERT_GT((U1.as_matrix() - U2.as_matrix()).norm(), 1e-3);
    CounterRng rng(s, 11);
    const Controller K{rng.gaussian_matrix(D, D, 0.3)};
    EXPECT_NEAR(e_opt(p, K, U1), e_opt(p, K, U2), 1e-9);
    EXPECT_NEAR(e_cost(p, K, U1), e_cost(p, K, U2), 1e-9);
  }
}

TEST(Measures, MatchBruteForce) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = random_problem(4, 3, 70 + s);
    const StateSet S = basis_states(4, {1});
    const StateSet U = orthonormal_complement(S, 4);
    CounterRng rng(s, 13);
    const Controller K{rng.gaussian_matrix(4, 4, 0.3)};
    EXPECT_NEAR(e_opt(p, K, U), brute_e_opt(p, K.K, U), 1e-12);
    EXPECT_NEAR(e_cost(p, K, U), cost(p, K, U) - cost_minimum(p, U), 1e-12);
  }
}

TEST(Measures, ZeroEquivalence) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = random_problem(4, 4, 110 + s);
    const StateSet U = orthonormal_complement(basis_states(4, {0}), 4);
    const Controller Kext = k_ext(p);
    EXPECT_LE(e_opt(p, Kext, U), 1e-12);
    EXPECT_LE(e_cost(p, Kext, U), 1e-10);
    CounterRng rng(s, 17);
    const Controller K{Kext.K + rng.gaussian_matrix(4, 4, 1e-2)};
    EXPECT_GT(e_opt(p, K, U), 1e-12);
    EXPECT_GT(e_cost(p, K, U), 1e-10);
  }
}

TEST(Measures, KExtAttainsTrainingMinimum) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = random_problem(5, 3, 130 + s);
    const StateSet S = test::random_states(5, 2, 140 + s);
    EXPECT_NEAR(cost(p, k_ext(p), S), cost_minimum(p, S), 1e-10);
    EXPECT_LE(((p.A() + p.B() * k_ext(p).K)).norm(), 1e-10);
  }
}

TEST(EOptGradient, MatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = random_problem(4, 2, 150 + s);
    const StateSet U = orthonormal_complement(basis_states(4, {0, 3}), 4);
    CounterRng rng(s, 19);
    const Eigen::MatrixXd K = rng.gaussian_matrix(4, 4, 0.3);
    const Eigen::MatrixXd g = e_opt_gradient(p, {K}, U);
    const Eigen::MatrixXd fd =
        test::fd_gradient([&](const Eigen::MatrixXd& M) { return brute_e_opt(p, M, U); }, K);
    EXPECT_LE((g - fd).norm() / std::max(1.0, fd.norm()), 1e-6);
  }
}

TEST(KNoExt, MatchesBruteForceAndMinNorm) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const int D = 3 + static_cast<int>(s % 4);
    const auto p = random_problem(D, 2, 160 + s);
    const StateSet S = basis_states(D, {0});
    const StateSet U = orthonormal_complement(S, D);
    const Controller Kne = k_no_ext(p, S, U);
    EXPECT_LE((Kne.K - brute_k_no_ext(p, S)).cwiseAbs().maxCoeff(), 1e-10);
    // Random, non-orthonormal training sets take the independent QR route.
    const StateSet Sr = test::random_states(D, 1 + static_cast<int>(s % 2), 170 + s);
    const StateSet Ur = orthonormal_complement(Sr, D);
    EXPECT_LE((min_norm_minimizer(p, Sr).K - k_no_ext(p, Sr, Ur).K).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Evaluate, RatiosAndDegenerateBaseline) {
  const auto p = random_problem(4, 3, 190);
  const StateSet S = basis_states(4, {0});
  const StateSet U = orthonormal_complement(S, 4);
  const Controller Kne = k_no_ext(p, S, U);
  const ExtrapolationReport self = evaluate_extrapolation(p, Kne, S, U);
  EXPECT_NEAR(self.ratio_opt, 1.0, 1e-12);
  EXPECT_NEAR(self.ratio_cost, 1.0, 1e-12);
  EXPECT_FALSE(self.opt_degenerate);

  const ExtrapolationReport deg = evaluate_extrapolation(p, Kne, k_ext(p), U);
  EXPECT_TRUE(deg.opt_degenerate);
  EXPECT_TRUE(deg.cost_degenerate);
  EXPECT_TRUE(std::isnan(deg.ratio_opt));
  EXPECT_TRUE(std::isnan(deg.ratio_cost));
}

TEST(NormGap, RequiresATrainingMinimizer) {
  const auto p = random_problem(3, 2, 200);
  const StateSet S = basis_states(3, {0});
  EXPECT_THROW(norm_gap(p, Controller::zero(3), S), std::invalid_argument);
  EXPECT_NEAR(norm_gap(p, min_norm_minimizer(p, S), S), 0.0, 1e-12);
  EXPECT_GT(norm_gap(p, k_ext(p), S), 0.0);
}

}  // namespace
}  // namespace pgx
