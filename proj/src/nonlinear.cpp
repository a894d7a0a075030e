#include "pgx/nonlinear.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pgx/parallel.hpp"
#include "pgx/rng.hpp"

namespace pgx {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

double env_cost(const NonlinearEnv& env, const std::vector<Trajectory>& trajectories,
                const std::optional<Eigen::VectorXd>& target_override) {
  require(!trajectories.empty(), "no trajectories");
  const Eigen::VectorXd target = target_override.value_or(env.target());
  double total = 0.0;
  for (const auto& tr : trajectories) {
    require(static_cast<int>(tr.size()) == env.horizon() + 1, "trajectory length must be H + 1");
    for (const auto& x : tr) total += env.stage_cost(x, target);
  }
  return total / (std::max(env.horizon(), 1) * static_cast<double>(trajectories.size()));
}

double env_cost(const NonlinearEnv& env, const Trajectory& trajectory,
                const std::optional<Eigen::VectorXd>& target_override) {
  return env_cost(env, std::vector<Trajectory>{trajectory}, target_override);
}

AdversarialObjective AdversarialObjective::for_env(const NonlinearEnv& env,
                                                   const std::vector<Eigen::VectorXd>& U,
                                                   double lambda) {
  require(lambda >= 0.0, "lambda must be nonnegative");
  AdversarialObjective obj;
  obj.lambda = lambda;
  for (const auto& u : U) obj.adversarial_targets.emplace_back(u, env.decoy_target(u));
  return obj;
}

Eigen::VectorXd AdversarialObjective::decoy_for(const Eigen::VectorXd& x0) const {
  for (const auto& [state, target] : adversarial_targets)
    if (state.size() == x0.size() && state == x0) return target;
  throw std::invalid_argument("no decoy target recorded for this unseen state");
}

RolloutBatch adversarial_batch(const NonlinearEnv& env, const std::vector<Eigen::VectorXd>& S,
                               const std::vector<Eigen::VectorXd>& U,
                               const AdversarialObjective& obj) {
  require(obj.lambda >= 0.0, "lambda must be nonnegative");
  RolloutBatch train = make_batch(env, S);
  if (U.empty() || obj.lambda == 0.0) return train;
  RolloutBatch adv = make_batch(env, U);
  adv.weights *= obj.lambda;
  for (std::size_t j = 0; j < U.size(); ++j)
    adv.targets.col(static_cast<Eigen::Index>(j)) = obj.decoy_for(U[j]);
  return concat(train, adv);
}

double adversarial_cost(const NonlinearEnv& env, const MlpController& ctrl,
                        const std::vector<Eigen::VectorXd>& S,
                        const std::vector<Eigen::VectorXd>& U, const AdversarialObjective& obj) {
  return rollout_cost(env, ctrl, adversarial_batch(env, S, U, obj));
}

NormalizedMeasure normalized_cost_measure(const NonlinearEnv& env, const MlpController& ctrl,
                                          const MlpController& ctrl_no_ext,
                                          const std::vector<Eigen::VectorXd>& U, double j_star) {
  NormalizedMeasure m;
  m.numerator = rollout_cost(env, ctrl, U) - j_star;
  m.denominator = rollout_cost(env, ctrl_no_ext, U) - j_star;
  m.degenerate = !(m.denominator > 1e-12);
  m.value = m.degenerate ? std::numeric_limits<double>::quiet_NaN() : m.numerator / m.denominator;
  return m;
}

MlpController make_controller(const NonlinearEnv& env, const NetSpec& net, std::uint64_t seed) {
  require(net.depth >= 1 && net.width >= 1, "network depth and width must be positive");
  std::vector<int> dims{env.state_dim()};
  for (int l = 0; l + 1 < net.depth; ++l) dims.push_back(net.width);
  dims.push_back(env.control_dim());
  return MlpController::init(dims, env.output_spec(), seed);
}

TrainResult train_controller(const NonlinearEnv& env, const RolloutBatch& batch, const NetSpec& net,
                             const OptimizerConfig& opt, std::uint64_t seed) {
  return train(env, make_controller(env, net, seed), batch, opt);
}

JStarEstimate estimate_j_star(const NonlinearEnv& env, const std::vector<Eigen::VectorXd>& U,
                              int n_runs, std::uint64_t seed, const NetSpec& net,
                              const OptimizerConfig& opt) {
  require(n_runs >= 1, "n_runs must be at least 1");
  const RolloutBatch batch = make_batch(env, U);
  JStarEstimate est;
  est.per_run.assign(n_runs, std::numeric_limits<double>::quiet_NaN());
  parallel_for(n_runs, [&](long i) {
    try {
      est.per_run[i] =
          train_controller(env, batch, net, opt, mix_seed(seed, static_cast<std::uint64_t>(i)))
              .best_cost;
    } catch (const TrainingDiverged& e) {
      if (std::isfinite(e.best_cost())) est.per_run[i] = e.best_cost();
    }
  });
  est.value = std::numeric_limits<double>::infinity();
  for (double c : est.per_run)
    if (std::isfinite(c)) est.value = std::min(est.value, c);
  if (!std::isfinite(est.value)) throw DivergenceError("every J* run diverged", n_runs);
  return est;
}

OptimizerConfig gd_protocol(double lr) {
  OptimizerConfig o;
  o.kind = OptimizerKind::gd;
  o.lr = lr;
  return o;
}

OptimizerConfig adam_protocol(double lr) {
  OptimizerConfig o;
  o.kind = OptimizerKind::adam;
  o.lr = lr;
  return o;
}

std::vector<Eigen::VectorXd> load_state_table(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open state table " + path.string());
  std::vector<Eigen::VectorXd> states;
  std::string line;
  for (int lineno = 1; std::getline(is, line); ++lineno) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<double> vals;
    std::stringstream ss(t);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size())
        throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                 ": cannot parse '" + tok + "' as a number");
      vals.push_back(v);
    }
    if (!states.empty() && static_cast<Eigen::Index>(vals.size()) != states.front().size())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(states.front().size()) + " values, got " +
                               std::to_string(vals.size()));
    states.push_back(Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
  }
  return states;
}

void save_state_table(const std::filesystem::path& path, const std::vector<Eigen::VectorXd>& states) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << std::setprecision(17);
  for (const auto& s : states) {
    for (Eigen::Index i = 0; i < s.size(); ++i) os << (i ? "," : "") << s(i);
    os << '\n';
  }
}

}  // namespace pgx
