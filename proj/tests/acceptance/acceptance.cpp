// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../test_util.hpp"
#include "pgx/bptt.hpp"
#include "pgx/csv.hpp"
#include "pgx/envs.hpp"
#include "pgx/extrapolation.hpp"
#include "pgx/gallery.hpp"
#include "pgx/mc_lab.hpp"
#include "pgx/nonlinear.hpp"
#include "pgx/runner.hpp"

namespace fs = std::filesystem;
using namespace pgx;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

StateSet first_basis(int D, int n) {
  std::vector<Eigen::VectorXd> v;
  for (int i = 0; i < n; ++i) v.push_back(Eigen::VectorXd::Unit(D, i));
  return StateSet(v);
}

RunOptions out_at(const fs::path& dir) {
  RunOptions o;
  o.out_dir = dir;
  return o;
}

double max_abs(const Eigen::MatrixXd& M) { return M.cwiseAbs().maxCoeff(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

int column(const CsvTable& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return static_cast<int>(i);
  throw std::runtime_error("missing column " + name);
}

double summary_value(const fs::path& p, const std::string& metric) {
  const CsvTable t = read_csv(p);
  for (const auto& row : t.rows)
    if (row[0] == metric) return std::stod(row[1]);
  throw std::runtime_error("missing metric " + metric);
}

Verdict shift_exactness() {
  Verdict v;
  for (auto [D, H] : std::vector<std::pair<int, int>>{{2, 2}, {3, 3}, {5, 5}, {5, 10}}) {
    const std::string tag = "(" + std::to_string(D) + "," + std::to_string(H) + ")";
    const LinearLqrProblem p = build({FamilyKind::shift, D, H, std::nullopt, std::nullopt});
    const StateSet S = first_basis(D, 1);
    const StateSet U = orthonormal_complement(S, D);
    const PgResult r = policy_gradient(p, S, {shift_learning_rate(D, H), 1, 0.0, 0});
    const double dk = max_abs(r.controller.K - shift_k2_closed_form(D, H, p.B()).K);
    const ExtrapolationReport rep = evaluate_extrapolation(p, r.controller, S, U);
    const ShiftRatios o = shift_ratio_bounds(D, H);
    v.require(dk <= 1e-10, tag + " K diff " + fmt(dk));
    v.require(std::abs(rep.ratio_opt - o.ratio_opt) <= 1e-9, tag + " ratio_opt");
    v.require(std::abs(rep.ratio_cost - o.ratio_cost) <= 1e-9, tag + " ratio_cost");
    v.require(rep.ratio_opt <= o.bound && rep.ratio_cost <= o.bound, tag + " bound");
  }
  return v;
}

Verdict identity_no_extrapolation() {
  Verdict v;
  const int D = 5, H = 5;
  const LinearLqrProblem p = build({FamilyKind::identity, D, H, std::nullopt, std::nullopt});
  const StateSet S = first_basis(D, 2);
  const StateSet U = orthonormal_complement(S, D);
  double worst = 0.0;
  long n = 0;
  policy_gradient(p, S, {1e-2, 100, 0.0, 0}, [&](long, const Eigen::MatrixXd& K) {
    const ExtrapolationReport r = evaluate_extrapolation(p, {K}, S, U);
    worst = std::max({worst, std::abs(r.ratio_opt - 1.0), std::abs(r.ratio_cost - 1.0)});
    ++n;
  });
  v.require(n == 101, "iterate count " + std::to_string(n));
  v.require(worst <= 1e-10, "ratio deviation " + fmt(worst));
  const double ec = e_cost(p, k_no_ext(p, S, U), U);
  v.require(ec == static_cast<double>(H), "E_cost(K_no_ext) = " + fmt(ec));
  return v;
}

Verdict minnorm_vs_pg() {
  Verdict v;
  const int D = 5, H = 5;
  const LinearLqrProblem p = build({FamilyKind::shift, D, H, std::nullopt, std::nullopt});
  const StateSet S = first_basis(D, 1);
  const StateSet U = orthonormal_complement(S, D);
  const double diff = max_abs(min_norm_minimizer(p, S).K - k_no_ext(p, S, U).K);
  v.require(diff <= 1e-9, "min-norm vs no-ext " + fmt(diff));
  const PgResult pg = policy_gradient(p, S, {shift_learning_rate(D, H), 100000, 1e-12, 0});
  v.require(pg.converged, "PG did not converge");
  double expect = 0.0;
  for (int d = 2; d <= D; ++d) expect += std::pow(1.0 - 2.0 * (d - 1) / 10.0, 2);
  const double gap = norm_gap(p, pg.controller, S);
  v.require(std::abs(gap - expect) <= 1e-9, "norm_gap " + fmt(gap) + " vs " + fmt(expect));
  return v;
}

Verdict diag_q_perfect() {
  Verdict v;
  const int D = 4, H = 8;
  const Eigen::VectorXd q = Eigen::Vector4d(1, 0, 0, 0);
  const LinearLqrProblem p = build({FamilyKind::shift, D, H, q, std::nullopt});
  const StateSet S = first_basis(D, 1);
  const StateSet U = orthonormal_complement(S, D);
  const DiagQOracle o = shift_diag_q_oracle(D, H, q);
  const PgResult r = policy_gradient(p, S, {o.eta, 1, 0.0, 0});
  const ExtrapolationReport rep = evaluate_extrapolation(p, r.controller, S, U);
  v.require(std::abs(rep.ratio_opt) <= 1e-10, "ratio_opt " + fmt(rep.ratio_opt));
  v.require(std::abs(rep.ratio_cost) <= 1e-10, "ratio_cost " + fmt(rep.ratio_cost));
  return v;
}

Verdict inner_product_bound(std::uint64_t seed) {
  Verdict v;
  for (auto [D, H] : std::vector<std::pair<int, int>>{{5, 2}, {10, 3}}) {
    const std::string tag = "(" + std::to_string(D) + "," + std::to_string(H) + ")";
    const McRecord r = mc_thm5(D, H, thm5_eta_max(D, H), 50000, seed);
    const double bound = 2.0 * H * (H - 1) / D;
    const auto& ip = r.inner_product;
    const auto& base = r.e_opt_baseline_mean;
    v.require(ip.n_trials >= 50000, tag + " trials");
    v.require(ip.mean >= bound - 3.0 * ip.std_error,
              tag + " inner " + fmt(ip.mean) + " < " + fmt(bound));
    v.require(std::abs(base.mean - 1.0) <= 3.0 * base.std_error,
              tag + " E_opt(K_no_ext) " + fmt(base.mean));
    v.detail += (v.detail.empty() ? "" : "; ");
    v.detail += tag + " inner " + fmt(ip.mean) + " >= " + fmt(bound);
  }
  return v;
}

Verdict random_systems(const fs::path& out, std::uint64_t seed) {
  Verdict v;
  const std::string text = R"({"schema_version": 1, "experiment": "lqr_family", "seed": )" +
                           std::to_string(seed) + R"(, "lqr_family": {
      "families": ["identity", "gaussian"], "D": 5, "H": 5, "eta": 1e-3,
      "n_seeds": 20, "tol": 1e-8, "max_iters": 1000000}})";
  const ExperimentConfig c = parse_config(text, {});
  run(c, out_at(out));
  const CsvTable t = read_csv(out / "lqr.csv");
  const int fam = column(t, "family"), gap = column(t, "train_gap");
  const int ro = column(t, "ratio_opt"), rc = column(t, "ratio_cost");
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> m;
  for (const auto& row : t.rows) {
    v.require(std::stod(row[gap]) <= 1e-6, row[fam] + " train_gap " + row[gap]);
    m[row[fam]].first.push_back(std::stod(row[ro]));
    m[row[fam]].second.push_back(std::stod(row[rc]));
  }
  v.require(m["gaussian"].first.size() == 20, "gaussian seed count");
  const double go = percentile(m["gaussian"].first, 0.5), gc = percentile(m["gaussian"].second, 0.5);
  const double io = percentile(m["identity"].first, 0.5), ic = percentile(m["identity"].second, 0.5);
  v.require(go < 0.9 && gc < 0.9, "gaussian medians " + fmt(go) + ", " + fmt(gc));
  v.require(std::abs(io - 1.0) <= 1e-10 && std::abs(ic - 1.0) <= 1e-10, "identity medians");
  if (v.pass)
    v.detail = "gaussian median ratio_opt " + fmt(go) + ", ratio_cost " + fmt(gc);
  return v;
}

double bptt_worst_violation(const NonlinearEnv& env, const MlpController& c, const RolloutBatch& b,
                            double h) {
  const Eigen::VectorXd g = rollout_cost_grad(env, c, b).grad;
  MlpController w = c;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < c.param_count(); ++i) {
    const double x = c.params()(i);
    w.params()(i) = x + h;
    const double fp = rollout_cost(env, w, b);
    w.params()(i) = x - h;
    const double fm = rollout_cost(env, w, b);
    w.params()(i) = x;
    const double fd = (fp - fm) / (2.0 * h);
    const double tol = std::max(1e-4 * std::max(std::abs(g(i)), std::abs(fd)), 1e-8);
    worst = std::max(worst, std::abs(g(i) - fd) / tol);
  }
  return worst;
}

Verdict gradient_oracles() {
  Verdict v;
  double lqr_worst = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const int D = 2 + static_cast<int>(s % 4), H = 1 + static_cast<int>(s % 6);
    const LinearLqrProblem p = test::random_problem(D, H, 1000 + s);
    const StateSet X = test::random_states(D, 1 + static_cast<int>(s % 3), 2000 + s);
    CounterRng rng(s, 5);
    const Eigen::MatrixXd K = rng.gaussian_matrix(D, D, 0.2);
    const Eigen::MatrixXd fd =
        test::fd_gradient([&](const Eigen::MatrixXd& M) { return cost(p, {M}, X); }, K);
    const double rel = (cost_gradient(p, {K}, X) - fd).norm() / std::max(1.0, fd.norm());
    lqr_worst = std::max(lqr_worst, rel);
  }
  v.require(lqr_worst <= 1e-5, "LQR rel error " + fmt(lqr_worst));
  double bptt_worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const int H = 1 + static_cast<int>(s % 10);
    CounterRng rng(s, 21);
    if (s % 2 == 0) {
      const PendulumEnv env({0.05, 10.0, H});
      const MlpController c = MlpController::init({2, 6, 5, 1}, env.output_spec(), s);
      const RolloutBatch b =
          make_batch(env, {rng.gaussian_vector(2, 2.0), rng.gaussian_vector(2, 2.0)});
      bptt_worst = std::max(bptt_worst, bptt_worst_violation(env, c, b, 1e-5));
    } else {
      QuadcopterParams qp;
      qp.H = H;
      const QuadcopterEnv env(qp);
      const MlpController c = MlpController::init({12, 8, 4}, env.output_spec(), s);
      std::vector<Eigen::VectorXd> X0;
      CounterRng qr(s, 3);
      for (int i = 0; i < 2; ++i) {
        Eigen::VectorXd x = qr.gaussian_vector(12, 0.1);
        x(2) += 0.75;
        X0.push_back(x);
      }
      bptt_worst = std::max(bptt_worst, bptt_worst_violation(env, c, make_batch(env, X0), 1e-6));
    }
  }
  v.require(bptt_worst <= 1.0, "BPTT tolerance ratio " + fmt(bptt_worst));
  if (v.pass)
    v.detail = "LQR rel " + fmt(lqr_worst) + ", BPTT worst/tol " + fmt(bptt_worst);
  return v;
}

Verdict pendulum(const fs::path& out, std::uint64_t seed, double& seconds) {
  Verdict v;
  RunOptions o;
  o.seed = seed;
  const ExperimentConfig c = default_config(ExperimentKind::pendulum, o);
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult r = run(c, out_at(out));
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.require(r.exit_code == kOk, "run exit code " + std::to_string(r.exit_code));
  const PendulumEnv env;
  const CsvTable t = read_csv(out / "pendulum_states.csv");
  const int th0 = column(t, "x0_theta"), thd0 = column(t, "x0_theta_dot");
  const int th = column(t, "xH_theta"), thd = column(t, "xH_theta_dot");
  double pg_err = 0.0, adv_err = 0.0;
  for (const auto& row : t.rows) {
    if (row[1] != "unseen") continue;
    const Eigen::Vector2d x0(std::stod(row[th0]), std::stod(row[thd0]));
    const Eigen::Vector2d xH(std::stod(row[th]), std::stod(row[thd]));
    if (row[0] == "pg")
      pg_err = std::max(pg_err, (xH - env.target()).cwiseAbs().maxCoeff());
    else
      adv_err = std::max(adv_err, (xH - env.decoy_target(x0)).cwiseAbs().maxCoeff());
  }
  v.require(pg_err <= 0.1, "PG unseen final-state error " + fmt(pg_err));
  v.require(adv_err <= 0.1, "adversarial decoy error " + fmt(adv_err));
  const double measure = summary_value(out / "pendulum_summary.csv", "normalized_measure");
  v.require(measure < 0.2, "normalized measure " + fmt(measure));
  v.require(seconds < 15 * 60, "runtime " + fmt(seconds) + " s exceeds 900 s");
  const std::string stats = "PG err " + fmt(pg_err) + ", decoy err " + fmt(adv_err) +
                            ", measure " + fmt(measure) + ", " + fmt(seconds) + " s";
  v.detail = v.pass ? stats : v.detail + " [" + stats + "]";
  return v;
}

Verdict quadcopter(const fs::path& out, std::uint64_t seed, double& seconds) {
  Verdict v;
  const QuadcopterEnv env;
  Eigen::VectorXd hover = env.target();
  const Eigen::VectorXd next = env.step(hover, Eigen::Vector4d::Constant(env.hover_rpm()));
  v.require(max_abs(next - hover) <= 1e-9, "hover residual " + fmt(max_abs(next - hover)));
  QuadcopterParams qp;
  qp.H = 6;
  const QuadcopterEnv short_env(qp);
  const MlpController probe = MlpController::init({12, 8, 8, 4}, short_env.output_spec(), seed);
  std::vector<Eigen::VectorXd> X0;
  CounterRng rng(seed, 3);
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd x = rng.gaussian_vector(12, 0.1);
    x(2) += 0.75;
    X0.push_back(x);
  }
  const double fd = bptt_worst_violation(short_env, probe, make_batch(short_env, X0), 1e-6);
  v.require(fd <= 1.0, "BPTT check worst/tol " + fmt(fd));

  RunOptions o;
  o.seed = seed;
  const ExperimentConfig c = default_config(ExperimentKind::quadcopter, o);
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult r = run(c, out_at(out));
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.require(r.exit_code == kOk, "run exit code " + std::to_string(r.exit_code));
  const CsvTable t = read_csv(out / "quadcopter_states.csv");
  const int px = column(t, "xH_x");
  double worst = 0.0;
  for (const auto& row : t.rows) {
    if (row[0] != "pg" || row[1] != "train") continue;
    const Eigen::Vector3d p(std::stod(row[px]), std::stod(row[px + 1]), std::stod(row[px + 2]));
    worst = std::max(worst, (p - env.target().head<3>()).norm());
  }
  v.require(worst <= 0.05, "training position error " + fmt(worst));
  v.require(seconds < 60 * 60, "runtime " + fmt(seconds) + " s exceeds 3600 s");
  const std::string stats = "position err " + fmt(worst) + ", " + fmt(seconds) + " s";
  v.detail = v.pass ? stats : v.detail + " [" + stats + "]";
  return v;
}

Verdict cyclic_frequency() {
  Verdict v;
  for (int D : {3, 5, 10}) {
    const double f = cyclic_vector_frequency(D, 1000, 77);
    v.require(f >= 0.999, "D=" + std::to_string(D) + " frequency " + fmt(f));
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pgx acceptance suite"};
  std::string out = (fs::temp_directory_path() / "pgx_acceptance").string();
  std::uint64_t seed = 0;
  bool slow = false;
  std::vector<int> only;
  app.add_option("--out", out, "scratch directory for experiment outputs");
  app.add_option("--seed", seed, "master seed");
  app.add_flag("--slow", slow, "also run the quadcopter training protocol");
  app.add_option("--only", only, "run only the listed criteria (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  struct Criterion {
    const char* name;
    double budget_s;  // 0 when the runtime is checked inside the criterion or has no bound
    bool slow;
    std::function<Verdict()> check;
  };
  double pend_s = 0.0, quad_s = 0.0;
  const std::vector<Criterion> criteria{
      {"shift-system exactness", 1.0, false, shift_exactness},
      {"identity no-extrapolation", 1.0, false, identity_no_extrapolation},
      {"min-norm vs PG", 1.0, false, minnorm_vs_pg},
      {"diagonal-Q perfect extrapolation", 0.0, false, diag_q_perfect},
      {"inner-product bound", 120.0, false, [&] { return inner_product_bound(seed); }},
      {"random-system extrapolation", 60.0, false,
       [&] { return random_systems(fs::path(out) / "lqr", seed); }},
      {"gradient oracles", 60.0, false, gradient_oracles},
      {"pendulum extrapolation", 0.0, false,
       [&] { return pendulum(fs::path(out) / "pendulum", seed, pend_s); }},
      {"quadcopter sanity", 0.0, true,
       [&] { return quadcopter(fs::path(out) / "quadcopter", seed, quad_s); }},
      {"cyclic-vector frequency", 0.0, false, cyclic_frequency},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Criterion& c = criteria[i];
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    if (c.slow && !slow) {
      std::printf("SKIP %2d %s [slow; pass --slow]\n", id, c.name);
      continue;
    }
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && s >= c.budget_s)
      v.require(false, "runtime " + fmt(s) + " s exceeds " + fmt(c.budget_s) + " s");
    if (!v.pass) ++failures;
    std::printf("%s %2d %s%s (%.2f s)%s%s\n", v.pass ? "PASS" : "FAIL", id, c.name,
                c.slow ? " [slow]" : "", s, v.detail.empty() ? "" : ": ", v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
