#include "pgx/mc_lab.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "pgx/extrapolation.hpp"
#include "pgx/parallel.hpp"
#include "pgx/rng.hpp"

namespace pgx {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double df_as_double(int n) { return static_cast<double>(double_factorial(n)); }

}  // namespace

unsigned __int128 double_factorial(int n) {
  require(n >= 1 && n % 2 == 1, "double_factorial expects an odd positive integer");
  const unsigned __int128 limit = ~static_cast<unsigned __int128>(0);
  unsigned __int128 r = 1;
  for (int k = n; k >= 3; k -= 2) {
    if (r > limit / static_cast<unsigned>(k))
      throw std::invalid_argument("double_factorial(" + std::to_string(n) +
                                  ") does not fit in 128 bits");
    r *= static_cast<unsigned>(k);
  }
  return r;
}

double thm5_eta_max(int D, int H) {
  require(H >= 2, "the bound requires H >= 2");
  require(D >= 2, "D must be at least 2");
  return 1.0 / (4.0 * D * H * (H - 1) * df_as_double(4 * H - 1));
}

double high_prob_eta_max(int D, int H) {
  require(H >= 2, "the bound requires H >= 2");
  require(D >= 2, "D must be at least 2");
  return 1.0 / (8.0 * static_cast<double>(D) * D * H * (H - 1) * df_as_double(4 * H - 1));
}

double high_prob_min_dim(int H, int n_train, double delta) {
  require(H >= 2, "the bound requires H >= 2");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  return n_train + 6.0 * n_train * H * (H - 1) * df_as_double(4 * H - 1) / delta;
}

double grad_inner_product(const LinearLqrProblem& problem, const StateSet& S, const StateSet& U) {
  const Controller zero = Controller::zero(problem.dim());
  return e_opt_gradient(problem, zero, U).cwiseProduct(cost_gradient(problem, zero, S)).sum();
}

AlignmentTrial alignment_trial(const Eigen::MatrixXd& A, int H, double eta) {
  require(A.rows() == A.cols() && A.rows() >= 2, "A must be square with D >= 2");
  require(H >= 1, "H must be at least 1");
  const auto D = A.rows();
  const double nu = static_cast<double>(D - 1);

  // x_k = A^k e_1 for k = 0..H.
  std::vector<Eigen::VectorXd> x(H + 1);
  x[0] = Eigen::VectorXd::Unit(D, 0);
  for (int k = 1; k <= H; ++k) x[k] = A * x[k - 1];

  // w_h = G_h x_h = sum_{s=1}^{H-h} (A^{s-1})' A^s x_h, and grad J = 2 sum_h w_h x_h'.
  std::vector<Eigen::VectorXd> w(H);
  for (int h = 0; h < H; ++h) {
    w[h] = Eigen::VectorXd::Zero(D);
    for (int s = 1; s <= H - h; ++s) {
      Eigen::VectorXd y = x[h + s];
      for (int r = 0; r < s - 1; ++r) y = A.transpose() * y;
      w[h] += y;
    }
  }

  auto project = [](Eigen::VectorXd v) {
    v(0) = 0.0;
    return v;
  };

  AlignmentTrial t;
  // grad E_opt(0) = (2/|U|) A P with P the projector onto U.
  for (int h = 0; h < H; ++h) t.inner_product += 4.0 / nu * w[h].dot(A * project(x[h]));
  double quad = 0.0;
  for (int h = 0; h < H; ++h) {
    for (int g = 0; g < H; ++g) {
      const double ww = w[h].dot(w[g]);
      t.grad_sq_norm += 4.0 * x[h].dot(x[g]) * ww;
      quad += 4.0 * project(x[h]).dot(x[g]) * ww;
    }
  }
  quad /= nu;
  t.e_opt_baseline = (A.squaredNorm() - x[1].squaredNorm()) / nu;
  t.e_opt_delta = -eta * t.inner_product + eta * eta * quad;
  t.e_opt_step = t.e_opt_baseline + t.e_opt_delta;
  return t;
}

double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double v : xs) s += v;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

McEstimate mean_estimate(std::span<const double> xs, std::uint64_t seed) {
  require(xs.size() >= 2, "an estimate needs at least two samples");
  const double n = static_cast<double>(xs.size());
  const double mean = pairwise_sum(xs) / n;
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - mean) * (xs[i] - mean);
  const double var = pairwise_sum(sq) / (n - 1.0);
  return {mean, std::sqrt(var / n), static_cast<long>(xs.size()), seed};
}

McEstimate ratio_estimate(std::span<const double> num, std::span<const double> den,
                          std::uint64_t seed) {
  require(num.size() == den.size() && num.size() >= 2, "ratio needs paired samples");
  const double n = static_cast<double>(num.size());
  const double mden = pairwise_sum(den) / n;
  const double r = (pairwise_sum(num) / n) / mden;
  std::vector<double> resid(num.size());
  for (std::size_t i = 0; i < num.size(); ++i) {
    const double e = num[i] - r * den[i];
    resid[i] = e * e;
  }
  const double var = pairwise_sum(resid) / (n - 1.0);
  return {r, std::sqrt(var / n) / std::abs(mden), static_cast<long>(num.size()), seed};
}

McRecord mc_thm5(int D, int H, double eta, long n_trials, std::uint64_t seed) {
  require(D >= 2, "D must be at least 2");
  require(H >= 1, "H must be at least 1");
  require(eta > 0.0, "eta must be positive");
  require(n_trials >= 100, "mc_thm5 needs at least 100 trials");

  std::vector<AlignmentTrial> trials(n_trials);
  std::vector<char> ok(n_trials, 0);
  const double sd = 1.0 / std::sqrt(static_cast<double>(D));
  parallel_for(n_trials, [&](long i) {
    CounterRng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    const AlignmentTrial t = alignment_trial(rng.gaussian_matrix(D, D, sd), H, eta);
    trials[i] = t;
    ok[i] = std::isfinite(t.e_opt_step) && std::isfinite(t.e_opt_baseline) &&
            std::isfinite(t.inner_product);
  });

  std::vector<double> step, base, inner, delta;
  for (long i = 0; i < n_trials; ++i) {
    if (!ok[i]) continue;
    step.push_back(trials[i].e_opt_step);
    base.push_back(trials[i].e_opt_baseline);
    inner.push_back(trials[i].inner_product);
    delta.push_back(trials[i].e_opt_delta);
  }
  McRecord rec;
  rec.n_excluded = n_trials - static_cast<long>(step.size());
  if (rec.n_excluded > n_trials / 1000)
    throw std::runtime_error(std::to_string(rec.n_excluded) + " of " + std::to_string(n_trials) +
                             " trials were non-finite (budget is 0.1%)");
  rec.ratio_of_means = ratio_estimate(step, base, seed);
  rec.ratio_gap = ratio_estimate(delta, base, seed);
  rec.inner_product = mean_estimate(inner, seed);
  rec.e_opt_baseline_mean = mean_estimate(base, seed);
  rec.e_opt_step_mean = mean_estimate(step, seed);
  return rec;
}

HighProbRecord mc_high_prob(int H, double delta, long n_trials, std::uint64_t seed) {
  require(n_trials >= 1, "need at least one trial");
  HighProbRecord rec;
  rec.D = static_cast<int>(std::ceil(high_prob_min_dim(H, 1, delta)));
  rec.eta = high_prob_eta_max(rec.D, H);
  rec.threshold = rec.eta * H * (H - 1) / (4.0 * rec.D);
  rec.n_trials = n_trials;
  rec.delta = delta;
  const double sd = 1.0 / std::sqrt(static_cast<double>(rec.D));
  std::vector<char> sat(n_trials, 0);
  parallel_for(n_trials, [&](long i) {
    CounterRng rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    const AlignmentTrial t = alignment_trial(rng.gaussian_matrix(rec.D, rec.D, sd), H, rec.eta);
    sat[i] = -t.e_opt_delta / t.e_opt_baseline >= rec.threshold;
  });
  for (char s : sat) rec.n_satisfied += s;
  return rec;
}

}  // namespace pgx
