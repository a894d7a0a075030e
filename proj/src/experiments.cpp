#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>

#include <json.hpp>

#include "pgx/csv.hpp"
#include "pgx/envs.hpp"
#include "pgx/extrapolation.hpp"
#include "pgx/mc_lab.hpp"
#include "pgx/parallel.hpp"
#include "pgx/rng.hpp"
#include "pgx/runner.hpp"

namespace pgx {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

StateSet first_basis_vectors(int n, int D) {
  std::vector<Eigen::VectorXd> v;
  for (int d = 0; d < n; ++d) v.push_back(Eigen::VectorXd::Unit(D, d));
  return StateSet(std::move(v));
}

std::string join_q(const std::optional<Eigen::VectorXd>& q) {
  if (!q) return "";
  std::string s;
  for (Eigen::Index i = 0; i < q->size(); ++i) s += (i ? ";" : "") + format_double((*q)(i));
  return s;
}

RunResult run_lqr_family(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto& c = cfg.lqr;
  struct Row {
    std::uint64_t seed;
    long iters;
    double gap, ropt, rcost;
  };
  const long per_family = c.n_seeds;
  std::vector<Row> rows(c.families.size() * per_family);
  parallel_for(static_cast<long>(rows.size()), [&](long idx) {
    const FamilyKind kind = c.families[idx / per_family];
    const std::uint64_t seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(idx % per_family));
    const LinearLqrProblem problem = build({kind, c.D, c.H, std::nullopt, seed});
    const StateSet S = first_basis_vectors(c.n_train, c.D);
    const StateSet U = orthonormal_complement(S, c.D);
    const PgResult pg = policy_gradient(problem, S, {c.eta, c.max_iters, c.tol, seed});
    const ExtrapolationReport rep = evaluate_extrapolation(problem, pg.controller, S, U);
    rows[idx] = {seed, pg.iterations, pg.trace.back() - cost_minimum(problem, S), rep.ratio_opt,
                 rep.ratio_cost};
  });
  CsvWriter w(opts.out_dir / "lqr.csv", cfg.effective_json,
              {"family", "seed", "D", "H", "eta", "iters", "train_gap", "ratio_opt", "ratio_cost"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    w.add(to_string(c.families[i / per_family])).add(static_cast<unsigned long long>(r.seed));
    w.add(c.D).add(c.H).add(c.eta).add(r.iters).add(r.gap).add(r.ropt).add(r.rcost);
    w.end_row();
  }
  w.close();
  return {kOk, {w.path()}, {}};
}

RunResult run_shift_oracle(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto& c = cfg.oracle;
  CsvWriter w(opts.out_dir / "oracle_check.csv", cfg.effective_json,
              {"D", "H", "q_diag", "eta", "k2_max_abs_diff", "ratio_opt_pg", "ratio_opt_oracle",
               "ratio_cost_pg", "ratio_cost_oracle", "max_abs_diff", "bound", "pass"});
  RunResult res;
  for (const auto& oc : c.cases) {
    const LinearLqrProblem problem = build({FamilyKind::shift, oc.D, oc.H, oc.q_diag, std::nullopt});
    const StateSet S = first_basis_vectors(1, oc.D);
    const StateSet U = orthonormal_complement(S, oc.D);
    double eta, ro, rc, bound = kNaN;
    Controller k2;
    if (oc.q_diag) {
      const DiagQOracle o = shift_diag_q_oracle(oc.D, oc.H, *oc.q_diag);
      eta = o.eta, ro = o.ratio_opt, rc = o.ratio_cost;
      k2 = shift_diag_q_k2(oc.D, oc.H, *oc.q_diag, problem.B());
    } else {
      const ShiftRatios o = shift_ratio_bounds(oc.D, oc.H);
      eta = shift_learning_rate(oc.D, oc.H), ro = o.ratio_opt, rc = o.ratio_cost, bound = o.bound;
      k2 = shift_k2_closed_form(oc.D, oc.H, problem.B());
    }
    const PgResult pg = policy_gradient(problem, S, {eta, 1, 0.0, cfg.seed});
    const ExtrapolationReport rep = evaluate_extrapolation(problem, pg.controller, S, U);
    const double kdiff = (pg.controller.K - k2.K).cwiseAbs().maxCoeff();
    const double rdiff = std::max(std::abs(rep.ratio_opt - ro), std::abs(rep.ratio_cost - rc));
    const bool within = std::isnan(bound) ||
                        (rep.ratio_opt <= bound + 1e-12 && rep.ratio_cost <= bound + 1e-12);
    const bool pass = kdiff <= c.k_tol && rdiff <= c.ratio_tol && within;
    if (!pass) {
      res.exit_code = kAcceptanceFailure;
      res.notes.push_back("shift oracle mismatch at D=" + std::to_string(oc.D) +
                          " H=" + std::to_string(oc.H));
    }
    w.add(oc.D).add(oc.H).add(join_q(oc.q_diag)).add(eta).add(kdiff).add(rep.ratio_opt).add(ro);
    w.add(rep.ratio_cost).add(rc).add(std::max(kdiff, rdiff)).add(bound).add(pass ? 1 : 0);
    w.end_row();
  }
  w.close();
  res.outputs.push_back(w.path());
  return res;
}

RunResult run_mc(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto& c = cfg.mc;
  RunResult res;
  CsvWriter w(opts.out_dir / "mc_thm5.csv", cfg.effective_json,
              {"D", "H", "eta", "n_trials", "seed", "inner_mean", "inner_se", "inner_bound",
               "e_opt_base_mean", "e_opt_base_se", "ratio_of_means", "ratio_of_means_se",
               "ratio_gap", "ratio_gap_se", "ratio_gap_bound", "n_excluded", "pass"});
  for (const auto& [D, H] : c.grid) {
    const double eta = c.eta.value_or(H >= 2 ? thm5_eta_max(D, H) : 0.0);
    const McRecord rec = mc_thm5(D, H, eta, c.n_trials, cfg.seed);
    const double bound = 2.0 * H * (H - 1) / D;
    const bool pass =
        rec.inner_product.mean >= bound - 3.0 * rec.inner_product.std_error &&
        std::abs(rec.e_opt_baseline_mean.mean - 1.0) <= 3.0 * rec.e_opt_baseline_mean.std_error &&
        rec.ratio_of_means.mean - 3.0 * rec.ratio_of_means.std_error <= 1.0;
    if (!pass) {
      res.exit_code = kAcceptanceFailure;
      res.notes.push_back("Monte-Carlo bound failed at D=" + std::to_string(D) +
                          " H=" + std::to_string(H));
    }
    w.add(D).add(H).add(eta).add(c.n_trials).add(static_cast<unsigned long long>(cfg.seed));
    w.add(rec.inner_product.mean).add(rec.inner_product.std_error).add(bound);
    w.add(rec.e_opt_baseline_mean.mean).add(rec.e_opt_baseline_mean.std_error);
    w.add(rec.ratio_of_means.mean).add(rec.ratio_of_means.std_error);
    w.add(rec.ratio_gap.mean).add(rec.ratio_gap.std_error).add(-eta * H * (H - 1) / D);
    w.add(rec.n_excluded).add(pass ? 1 : 0);
    w.end_row();
  }
  w.close();
  res.outputs.push_back(w.path());

  if (c.high_prob) {
    const HighProbRecord hp =
        mc_high_prob(c.high_prob_H, c.high_prob_delta, c.high_prob_trials, cfg.seed);
    const double frac = static_cast<double>(hp.n_satisfied) / hp.n_trials;
    const bool pass = frac >= 1.0 - hp.delta;
    if (!pass) {
      res.exit_code = kAcceptanceFailure;
      res.notes.push_back("high-probability branch held in too few trials");
    }
    CsvWriter hw(opts.out_dir / "mc_thm5_high_prob.csv", cfg.effective_json,
                 {"H", "delta", "D", "eta", "threshold", "n_trials", "n_satisfied", "fraction",
                  "pass"});
    hw.add(c.high_prob_H).add(hp.delta).add(hp.D).add(hp.eta).add(hp.threshold);
    hw.add(hp.n_trials).add(hp.n_satisfied).add(frac).add(pass ? 1 : 0);
    hw.end_row();
    hw.close();
    res.outputs.push_back(hw.path());
  }
  return res;
}

RunResult run_minnorm(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto& c = cfg.minnorm;
  RunResult res;
  CsvWriter w(opts.out_dir / "minnorm.csv", cfg.effective_json,
              {"family", "seed", "D", "H", "minnorm_vs_no_ext", "norm_gap", "norm_gap_oracle",
               "pass"});
  auto emit = [&](const std::string& fam, std::uint64_t seed, int D, int H, double diff,
                  double gap, double oracle) {
    bool pass = diff <= c.match_tol;
    if (!std::isnan(oracle)) pass = pass && std::abs(gap - oracle) <= c.match_tol;
    if (!std::isnan(gap)) pass = pass && gap >= -c.match_tol;
    if (!pass) {
      res.exit_code = kAcceptanceFailure;
      res.notes.push_back("min-norm check failed for " + fam + " D=" + std::to_string(D));
    }
    w.add(fam).add(static_cast<unsigned long long>(seed)).add(D).add(H).add(diff).add(gap);
    w.add(oracle).add(pass ? 1 : 0);
    w.end_row();
  };
  for (const auto& [D, H] : c.shift_grid) {
    const LinearLqrProblem problem = build({FamilyKind::shift, D, H, std::nullopt, std::nullopt});
    const StateSet S = first_basis_vectors(1, D);
    const StateSet U = orthonormal_complement(S, D);
    const double diff =
        (min_norm_minimizer(problem, S).K - k_no_ext(problem, S, U).K).cwiseAbs().maxCoeff();
    const PgResult pg =
        policy_gradient(problem, S, {shift_learning_rate(D, H), c.max_iters, c.tol, cfg.seed});
    emit("shift", 0, D, H, diff, pg.converged ? norm_gap(problem, pg.controller, S) : kNaN,
         shift_norm_gap(D, H));
  }
  struct Row {
    std::uint64_t seed;
    double diff, gap;
  };
  std::vector<Row> rows(c.n_random);
  parallel_for(c.n_random, [&](long i) {
    const std::uint64_t seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(i));
    const LinearLqrProblem problem =
        build({FamilyKind::gaussian, c.random_D, c.random_H, std::nullopt, seed});
    const StateSet S = first_basis_vectors(1, c.random_D);
    const StateSet U = orthonormal_complement(S, c.random_D);
    const double diff =
        (min_norm_minimizer(problem, S).K - k_no_ext(problem, S, U).K).cwiseAbs().maxCoeff();
    const PgResult pg = policy_gradient(problem, S, {c.eta, c.max_iters, c.tol, seed});
    rows[i] = {seed, diff, pg.converged ? norm_gap(problem, pg.controller, S) : kNaN};
  });
  for (const Row& r : rows) emit("gaussian", r.seed, c.random_D, c.random_H, r.diff, r.gap, kNaN);
  w.close();
  res.outputs.push_back(w.path());
  return res;
}

std::vector<std::string> state_names(ExperimentKind kind) {
  if (kind == ExperimentKind::pendulum) return {"theta", "theta_dot"};
  return {"x", "y", "z", "phi", "theta", "psi",
          "x_dot", "y_dot", "z_dot", "phi_dot", "theta_dot", "psi_dot"};
}

struct SeedRun {
  std::uint64_t seed;
  TrainResult result;
  bool diverged;
};

SeedRun train_seed(const NonlinearEnv& env, const RolloutBatch& batch, const NetSpec& net,
                   const OptimizerConfig& opt, std::uint64_t seed) {
  try {
    return {seed, train_controller(env, batch, net, opt, seed), false};
  } catch (const TrainingDiverged& e) {
    if (!std::isfinite(e.best_cost())) throw;
    return {seed, TrainResult{e.best_so_far(), e.best_cost(), 0, {}, e.index(), false}, true};
  }
}

RunResult run_nonlinear(const ExperimentConfig& cfg, const RunOptions& opts) {
  const auto& c = cfg.nonlinear;
  const std::string prefix = to_string(cfg.kind);
  std::unique_ptr<NonlinearEnv> env;
  if (cfg.kind == ExperimentKind::pendulum) {
    PendulumParams p;
    p.H = c.horizon;
    env = std::make_unique<PendulumEnv>(p);
  } else {
    QuadcopterParams p;
    p.H = c.horizon;
    env = std::make_unique<QuadcopterEnv>(p);
  }
  const auto& S = c.train_states;
  const auto& U = c.unseen_states;

  // Distinct seed streams for the three groups of runs.
  const std::uint64_t pg_master = mix_seed(cfg.seed, 1);
  const std::uint64_t adv_master = mix_seed(cfg.seed, 2);
  const std::uint64_t js_master = mix_seed(cfg.seed, 3);

  std::vector<std::optional<SeedRun>> pg_slots(c.n_seeds), adv_slots(c.n_adv_seeds);
  const RolloutBatch pg_batch = make_batch(*env, S);
  const AdversarialObjective obj = AdversarialObjective::for_env(*env, U, c.lambda);
  const RolloutBatch adv_batch = adversarial_batch(*env, S, U, obj);
  parallel_for(c.n_seeds + c.n_adv_seeds, [&](long i) {
    if (i < c.n_seeds)
      pg_slots[i] = train_seed(*env, pg_batch, c.net, c.pg_opt,
                         mix_seed(pg_master, static_cast<std::uint64_t>(i)));
    else
      adv_slots[i - c.n_seeds] = train_seed(*env, adv_batch, c.net, c.adv_opt,
                                      mix_seed(adv_master, static_cast<std::uint64_t>(i - c.n_seeds)));
  });
  std::vector<SeedRun> pg, adv;
  for (auto& r : pg_slots) pg.push_back(std::move(*r));
  for (auto& r : adv_slots) adv.push_back(std::move(*r));
  const JStarEstimate js = estimate_j_star(*env, U, c.n_jstar_runs, js_master, c.net, c.jstar_opt);

  std::size_t adv_sel = 0;
  for (std::size_t i = 1; i < adv.size(); ++i)
    if (adv[i].result.best_cost < adv[adv_sel].result.best_cost) adv_sel = i;
  const MlpController& no_ext = adv[adv_sel].result.best;

  std::vector<NormalizedMeasure> measures;
  for (const auto& r : pg)
    measures.push_back(normalized_cost_measure(*env, r.result.best, no_ext, U, js.value));
  std::vector<std::size_t> order(pg.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = measures[a].value, vb = measures[b].value;
    if (std::isnan(va) != std::isnan(vb)) return std::isnan(vb);
    return va < vb;
  });
  const std::size_t pg_sel = order[(order.size() - 1) / 2];
  const MlpController& pg_ctrl = pg[pg_sel].result.best;

  RunResult res;
  CsvWriter runs(opts.out_dir / (prefix + "_runs.csv"), cfg.effective_json,
                 {"role", "index", "seed", "iterations", "best_iteration", "best_cost", "diverged",
                  "unseen_cost", "normalized_measure", "selected"});
  for (std::size_t i = 0; i < pg.size(); ++i) {
    const auto& r = pg[i];
    runs.add("pg").add(static_cast<long>(i)).add(static_cast<unsigned long long>(r.seed));
    runs.add(r.result.iterations).add(r.result.best_iteration).add(r.result.best_cost);
    runs.add(r.diverged ? 1 : 0).add(rollout_cost(*env, r.result.best, U));
    runs.add(measures[i].value).add(i == pg_sel ? 1 : 0);
    runs.end_row();
  }
  for (std::size_t i = 0; i < adv.size(); ++i) {
    const auto& r = adv[i];
    runs.add("no_ext").add(static_cast<long>(i)).add(static_cast<unsigned long long>(r.seed));
    runs.add(r.result.iterations).add(r.result.best_iteration).add(r.result.best_cost);
    runs.add(r.diverged ? 1 : 0).add(rollout_cost(*env, r.result.best, U)).add(kNaN);
    runs.add(i == adv_sel ? 1 : 0);
    runs.end_row();
  }
  for (std::size_t i = 0; i < js.per_run.size(); ++i) {
    runs.add("j_star").add(static_cast<long>(i));
    runs.add(static_cast<unsigned long long>(mix_seed(js_master, i)));
    runs.add(kNaN).add(kNaN).add(js.per_run[i]).add(std::isnan(js.per_run[i]) ? 1 : 0);
    runs.add(js.per_run[i]).add(kNaN).add(js.per_run[i] == js.value ? 1 : 0);
    runs.end_row();
  }
  runs.close();
  res.outputs.push_back(runs.path());

  const auto names = state_names(cfg.kind);
  std::vector<std::string> cols{"controller", "set", "index"};
  for (const auto& n : names) cols.push_back("x0_" + n);
  for (const auto& n : names) cols.push_back("xH_" + n);
  CsvWriter states(opts.out_dir / (prefix + "_states.csv"), cfg.effective_json, cols);
  std::vector<std::string> tcols{"controller", "set", "index", "h"};
  tcols.insert(tcols.end(), names.begin(), names.end());
  CsvWriter traj(opts.out_dir / (prefix + "_trajectories.csv"), cfg.effective_json, tcols);
  const std::pair<const char*, const MlpController*> ctrls[] = {{"pg", &pg_ctrl},
                                                               {"no_ext", &no_ext}};
  const std::pair<const char*, const std::vector<Eigen::VectorXd>*> sets[] = {{"train", &S},
                                                                             {"unseen", &U}};
  for (const auto& [cname, ctrl] : ctrls) {
    for (const auto& [sname, set] : sets) {
      for (std::size_t i = 0; i < set->size(); ++i) {
        const auto tr = simulate(*env, *ctrl, (*set)[i]);
        states.add(cname).add(sname).add(static_cast<long>(i));
        for (Eigen::Index d = 0; d < tr.front().size(); ++d) states.add(tr.front()(d));
        for (Eigen::Index d = 0; d < tr.back().size(); ++d) states.add(tr.back()(d));
        states.end_row();
        for (std::size_t h = 0; h < tr.size(); ++h) {
          traj.add(cname).add(sname).add(static_cast<long>(i)).add(static_cast<long>(h));
          for (Eigen::Index d = 0; d < tr[h].size(); ++d) traj.add(tr[h](d));
          traj.end_row();
        }
      }
    }
  }
  states.close();
  traj.close();
  res.outputs.push_back(states.path());
  res.outputs.push_back(traj.path());

  CsvWriter summary(opts.out_dir / (prefix + "_summary.csv"), cfg.effective_json,
                    {"metric", "value"});
  auto metric = [&](const char* k, double v) { summary.add(k).add(v).end_row(); };
  metric("j_star", js.value);
  metric("pg_selected_index", static_cast<double>(pg_sel));
  metric("pg_train_cost", pg[pg_sel].result.best_cost);
  metric("pg_unseen_cost", rollout_cost(*env, pg_ctrl, U));
  metric("no_ext_selected_index", static_cast<double>(adv_sel));
  metric("no_ext_objective", adv[adv_sel].result.best_cost);
  metric("no_ext_unseen_cost", rollout_cost(*env, no_ext, U));
  metric("normalized_measure", measures[pg_sel].value);
  summary.close();
  res.outputs.push_back(summary.path());

  if (c.write_params) {
    save_params(opts.out_dir / (prefix + "_pg.bin"), pg_ctrl);
    save_params(opts.out_dir / (prefix + "_no_ext.bin"), no_ext);
    res.outputs.push_back(opts.out_dir / (prefix + "_pg.bin"));
    res.outputs.push_back(opts.out_dir / (prefix + "_no_ext.bin"));
  }
  return res;
}

bool parse_number(const std::string& s, double& out) {
  if (s == "nan") {
    out = kNaN;
    return true;
  }
  if (s == "inf" || s == "-inf") {
    out = s[0] == '-' ? -INFINITY : INFINITY;
    return true;
  }
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && r.ec == std::errc() && r.ptr == s.data() + s.size();
}

}  // namespace

RunResult run(const ExperimentConfig& cfg, const RunOptions& opts) {
  fs::create_directories(opts.out_dir);
  switch (cfg.kind) {
    case ExperimentKind::lqr_family: return run_lqr_family(cfg, opts);
    case ExperimentKind::shift_oracle: return run_shift_oracle(cfg, opts);
    case ExperimentKind::mc_thm5: return run_mc(cfg, opts);
    case ExperimentKind::pendulum:
    case ExperimentKind::quadcopter: return run_nonlinear(cfg, opts);
    case ExperimentKind::minnorm_check: return run_minnorm(cfg, opts);
  }
  throw ConfigError("unhandled experiment kind");
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return kNaN;
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("percentile p must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

void summarize(const std::vector<fs::path>& inputs, const fs::path& output,
               const std::vector<std::string>& group_by) {
  if (inputs.empty()) throw std::invalid_argument("summarize needs at least one input CSV");
  std::vector<CsvTable> tables;
  for (const auto& p : inputs) tables.push_back(read_csv(p));
  const auto& header = tables.front().header;
  for (std::size_t i = 1; i < tables.size(); ++i)
    if (tables[i].header != header)
      throw std::invalid_argument("schema mismatch: " + inputs[i].string() +
                                  " has a different header than " + inputs[0].string());

  std::vector<char> is_group(header.size(), 0);
  if (!group_by.empty()) {
    for (const auto& g : group_by) {
      const auto it = std::find(header.begin(), header.end(), g);
      if (it == header.end()) throw std::invalid_argument("no column named '" + g + "'");
      is_group[it - header.begin()] = 1;
    }
  } else {
    double tmp;
    for (const auto& t : tables)
      for (const auto& row : t.rows)
        for (std::size_t j = 0; j < row.size(); ++j)
          if (!parse_number(row[j], tmp)) is_group[j] = 1;
  }

  std::vector<std::string> keys;
  std::map<std::string, std::vector<const std::vector<std::string>*>> groups;
  for (const auto& t : tables) {
    for (const auto& row : t.rows) {
      std::string key;
      for (std::size_t j = 0; j < row.size(); ++j)
        if (is_group[j]) key += row[j] + '\x1f';
      if (!groups.count(key)) keys.push_back(key);
      groups[key].push_back(&row);
    }
  }

  std::vector<std::string> cols;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (is_group[j]) cols.push_back(header[j]);
  cols.push_back("n");
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (is_group[j]) continue;
    for (const char* s : {"_median", "_q25", "_q75"}) cols.push_back(header[j] + s);
  }
  nlohmann::json meta;
  meta["summarize"]["inputs"] = nlohmann::json::array();
  for (const auto& p : inputs) meta["summarize"]["inputs"].push_back(p.string());
  meta["summarize"]["group_by"] = group_by;
  meta["summarize"]["percentiles"] = "linear interpolation at p(n-1)";
  CsvWriter w(output, meta.dump(), cols);
  for (const auto& key : keys) {
    const auto& rows = groups[key];
    for (std::size_t j = 0; j < header.size(); ++j)
      if (is_group[j]) w.add((*rows.front())[j]);
    w.add(static_cast<long>(rows.size()));
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (is_group[j]) continue;
      std::vector<double> vals;
      for (const auto* r : rows) {
        double v;
        if (parse_number((*r)[j], v) && !std::isnan(v)) vals.push_back(v);
      }
      w.add(percentile(vals, 0.5)).add(percentile(vals, 0.25)).add(percentile(vals, 0.75));
    }
    w.end_row();
  }
  w.close();
}

}  // namespace pgx
