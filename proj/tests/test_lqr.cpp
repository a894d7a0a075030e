#include <gtest/gtest.h>

#include <cmath>

#include "pgx/errors.hpp"
#include "pgx/extrapolation.hpp"
#include "pgx/gallery.hpp"
#include "test_util.hpp"

namespace pgx {
namespace {

using test::basis_states;
using test::random_problem;
using test::random_states;

// Cost summed directly over unrolled states, independent of the library rollout.
double brute_cost(const LinearLqrProblem& p, const Eigen::MatrixXd& K, const StateSet& X) {
  const Eigen::MatrixXd M = p.A() + p.B() * K;
  double c = 0.0;
  for (const auto& x0 : X.states()) {
    Eigen::VectorXd x = x0;
    for (int h = 0; h <= p.horizon(); ++h) {
      c += x.dot(p.Q() * x);
      x = M * x;
    }
  }
  return c / static_cast<double>(X.size());
}

TEST(LinearLqrProblem, RejectsInvalidInputs) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(LinearLqrProblem(I, I, I, 0), std::invalid_argument);
  EXPECT_THROW(LinearLqrProblem(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1),
                                Eigen::MatrixXd::Identity(1, 1), 2),
               std::invalid_argument);
  EXPECT_THROW(LinearLqrProblem(I, Eigen::MatrixXd::Zero(3, 3), I, 2), std::invalid_argument);
  Eigen::MatrixXd Qbad = I;
  Qbad(0, 1) = 0.5;
  EXPECT_THROW(LinearLqrProblem(I, I, Qbad, 2), std::invalid_argument);
  EXPECT_THROW(LinearLqrProblem(I, I, -I, 2), std::invalid_argument);
  Eigen::MatrixXd Anan = I;
  Anan(1, 1) = NAN;
  EXPECT_THROW(LinearLqrProblem(Anan, I, I, 2), std::invalid_argument);
  EXPECT_THROW(LinearLqrProblem(Eigen::MatrixXd::Identity(3, 2), I, I, 2), std::invalid_argument);
}

TEST(StateSet, RejectsZeroAndNonFiniteStates) {
  EXPECT_THROW(StateSet({Eigen::VectorXd::Zero(3)}), std::invalid_argument);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(3);
  v(2) = INFINITY;
  EXPECT_THROW(StateSet({v}), std::invalid_argument);
  EXPECT_THROW(StateSet({Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(2)}),
               std::invalid_argument);
  const StateSet S({Eigen::Vector3d(3, 4, 0)});
  EXPECT_DOUBLE_EQ(S.norms()[0], 5.0);
}

TEST(Rollout, ShiftSystemCyclesThroughBasis) {
  const LinearLqrProblem p = build({FamilyKind::shift, 2, 2, std::nullopt, std::nullopt});
  const auto xs = rollout(p, Controller::zero(2), test::unit(2, 0));
  ASSERT_EQ(xs.size(), 3u);
  EXPECT_EQ(xs[0], test::unit(2, 0));
  EXPECT_EQ(xs[1], test::unit(2, 1));
  EXPECT_EQ(xs[2], test::unit(2, 0));
}

TEST(Cost, MatchesBruteForceAndMinimum) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = random_problem(4, 3, s);
    const auto X = random_states(4, 2, s);
    CounterRng rng(s, 3);
    const Controller K{rng.gaussian_matrix(4, 4, 0.3)};
    EXPECT_NEAR(cost(p, K, X), brute_cost(p, K.K, X), 1e-10 * (1.0 + brute_cost(p, K.K, X)));
    double jstar = 0.0;
    for (const auto& x : X.states()) jstar += x.dot(p.Q() * x);
    EXPECT_NEAR(cost_minimum(p, X), jstar / 2.0, 1e-12);
  }
}

TEST(CostGradient, MatchesFiniteDifferences) {
  int checked = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const int D = 2 + static_cast<int>(s % 4);
    const int H = 1 + static_cast<int>(s % 6);
    const auto p = random_problem(D, H, 1000 + s);
    const auto X = random_states(D, 1 + static_cast<int>(s % 3), 2000 + s);
    CounterRng rng(s, 5);
    const Eigen::MatrixXd K = rng.gaussian_matrix(D, D, 0.2);
    const Eigen::MatrixXd g = cost_gradient(p, {K}, X);
    const Eigen::MatrixXd fd =
        test::fd_gradient([&](const Eigen::MatrixXd& M) { return brute_cost(p, M, X); }, K);
    EXPECT_LE((g - fd).norm() / std::max(1.0, fd.norm()), 1e-5) << "seed " << s;
    ++checked;
  }
  EXPECT_EQ(checked, 50);
}

TEST(PolicyGradient, RowSpanStaysInEncounteredStates) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const int D = 6, H = 2;
    const auto p = random_problem(D, H, 300 + s);
    const StateSet S = basis_states(D, {0});
    // States encountered so far: the trajectories under every earlier iterate.
    std::vector<Eigen::VectorXd> seen;
    auto check = [&](long, const Eigen::MatrixXd& K) {
      if (!seen.empty()) {
        Eigen::MatrixXd span(D, seen.size());
        for (std::size_t i = 0; i < seen.size(); ++i) span.col(i) = seen[i];
        const Eigen::MatrixXd Qb = span.colPivHouseholderQr().householderQ();
        const Eigen::Index r = span.colPivHouseholderQr().rank();
        const Eigen::MatrixXd perp = Qb.rightCols(D - r);
        if (perp.cols() > 0) {
          EXPECT_LE((K * perp).cwiseAbs().maxCoeff(), 1e-10);
        }
      } else {
        EXPECT_EQ(K.cwiseAbs().maxCoeff(), 0.0);
      }
      for (const auto& x0 : S.states())
        for (const auto& x : rollout(p, {K}, x0)) seen.push_back(x);
    };
    policy_gradient(p, S, {1e-2, 20, 0.0, 0}, check);
  }
}

TEST(PolicyGradient, DescentBelowLipschitzStep) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = random_problem(4, 3, 500 + s);
    const auto X = random_states(4, 2, 600 + s);
    // Lipschitz estimate of the gradient from random probes near the start.
    CounterRng rng(s, 9);
    double L = 0.0;
    for (int i = 0; i < 50; ++i) {
      const Eigen::MatrixXd K1 = rng.gaussian_matrix(4, 4, 0.1);
      const Eigen::MatrixXd K2 = K1 + rng.gaussian_matrix(4, 4, 1e-3);
      L = std::max(L, (cost_gradient(p, {K1}, X) - cost_gradient(p, {K2}, X)).norm() /
                          (K1 - K2).norm());
    }
    const double eta = 1.0 / (4.0 * L);
    const PgResult r = policy_gradient(p, X, {eta, 200, 0.0, 0});
    for (std::size_t t = 1; t < r.trace.size(); ++t) EXPECT_LE(r.trace[t], r.trace[t - 1] + 1e-12);
  }
}

TEST(PolicyGradient, StopsAtToleranceAndRecordsTrace) {
  const auto p = build({FamilyKind::identity, 3, 3, std::nullopt, std::nullopt});
  const StateSet S = basis_states(3, {0});
  const PgResult r = policy_gradient(p, S, {1e-2, 100000, 1e-8, 0});
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.trace.back() - cost_minimum(p, S), 1e-8);
  EXPECT_EQ(r.trace.size(), static_cast<std::size_t>(r.iterations) + 1);
  const PgResult capped = policy_gradient(p, S, {1e-2, 3, 0.0, 0});
  EXPECT_EQ(capped.iterations, 3);
  EXPECT_FALSE(capped.converged);
}

TEST(PolicyGradient, DivergenceReportsIteration) {
  const auto p = build({FamilyKind::identity, 2, 4, std::nullopt, std::nullopt});
  const StateSet S = basis_states(2, {0});
  try {
    policy_gradient(p, S, {1e3, 1000, 0.0, 0});
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GT(e.index(), 1);
  }
}

TEST(PolicyGradient, MinimizerCharacterization) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = random_problem(4, 2, 700 + s);
    const StateSet S = basis_states(4, {0, 2});
    const Controller Kmin = min_norm_minimizer(p, S);
    double worst = 0.0;
    for (const auto& x : S.states()) {
      const Eigen::VectorXd y = (p.A() + p.B() * Kmin.K) * x;
      worst = std::max(worst, std::sqrt(y.dot(p.Q() * y)));
    }
    EXPECT_LE(worst, 1e-6);
    EXPECT_NEAR(cost(p, Kmin, S), cost_minimum(p, S), 1e-9);
    // A controller off the optimality condition is strictly above J*.
    const Controller K0 = Controller::zero(4);
    double worst0 = 0.0;
    for (const auto& x : S.states()) {
      const Eigen::VectorXd y = p.A() * x;
      worst0 = std::max(worst0, std::sqrt(y.dot(p.Q() * y)));
    }
    EXPECT_EQ(worst0 > 1e-6, cost(p, K0, S) > cost_minimum(p, S) + 1e-9);
  }
}

TEST(PgConfig, Validation) {
  EXPECT_THROW((PgConfig{0.0, 10, 0.0, 0}).validate(), std::invalid_argument);
  EXPECT_THROW((PgConfig{1e-3, 0, 0.0, 0}).validate(), std::invalid_argument);
  EXPECT_THROW((PgConfig{1e-3, 10, -1.0, 0}).validate(), std::invalid_argument);
}

}  // namespace
}  // namespace pgx
