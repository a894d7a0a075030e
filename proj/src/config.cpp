#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pgx/runner.hpp"

namespace pgx {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ConfigError("config field '" + field + "': " + msg);
}

json optimizer_json(const char* kind, double lr) {
  return {{"kind", kind},       {"lr", lr},
          {"beta1", 0.9},       {"beta2", 0.999},
          {"epsilon", 1e-8},    {"min_improve", 1e-5},
          {"patience_iters", 5000}, {"max_iters", 75000}};
}

json states_json(const std::vector<std::vector<double>>& rows) { return rows; }

json section_defaults(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::lqr_family:
      return {{"families", {"identity", "shift", "gaussian"}},
              {"D", 5}, {"H", 5}, {"eta", 1e-3}, {"max_iters", 100000},
              {"tol", 1e-8}, {"n_train", 1}, {"n_seeds", 20}};
    case ExperimentKind::shift_oracle:
      return {{"cases",
               {{{"D", 2}, {"H", 2}}, {{"D", 2}, {"H", 4}}, {{"D", 3}, {"H", 3}},
                {{"D", 5}, {"H", 5}}, {{"D", 5}, {"H", 10}},
                {{"D", 2}, {"H", 2}, {"q_diag", {1.0, 1.0}}},
                {{"D", 4}, {"H", 8}, {"q_diag", {1.0, 0.0, 0.0, 0.0}}},
                {{"D", 3}, {"H", 6}, {"q_diag", {0.5, 2.0, 1.0}}}}},
              {"k_tol", 1e-10}, {"ratio_tol", 1e-9}};
    case ExperimentKind::mc_thm5:
      return {{"grid", {{5, 2}, {10, 3}}}, {"n_trials", 50000}, {"eta", nullptr},
              {"high_prob", false}, {"high_prob_H", 2}, {"high_prob_delta", 0.5},
              {"high_prob_trials", 20}};
    case ExperimentKind::pendulum:
      return {{"net", {{"depth", 4}, {"width", 50}}},
              {"pg_optimizer", optimizer_json("gd", 5e-4)},
              {"adv_optimizer", optimizer_json("adam", 3e-4)},
              {"jstar_optimizer", optimizer_json("gd", 5e-4)},
              {"lambda", 0.1}, {"n_seeds", 5}, {"n_adv_seeds", 5}, {"n_jstar_runs", 5},
              {"horizon", 100},
              {"train_states", states_json({{2.64, 0.0}, {3.64, 0.0}})},
              {"unseen_states",
               states_json({{0.0, 0.0}, {0.79, 0.0}, {1.57, 0.0}, {4.71, 0.0}, {5.50, 0.0}})},
              {"train_table", nullptr}, {"unseen_table", nullptr}, {"write_params", true}};
    case ExperimentKind::quadcopter: {
      auto q = [](double x, double y, double z) {
        std::vector<double> s(12, 0.0);
        s[0] = x, s[1] = y, s[2] = z;
        return s;
      };
      return {{"net", {{"depth", 4}, {"width", 50}}},
              {"pg_optimizer", optimizer_json("adam", 3e-4)},
              {"adv_optimizer", optimizer_json("adam", 3e-4)},
              {"jstar_optimizer", optimizer_json("adam", 3e-4)},
              {"lambda", 0.1}, {"n_seeds", 5}, {"n_adv_seeds", 5}, {"n_jstar_runs", 5},
              {"horizon", 50},
              {"train_states", states_json({q(0, 0, 0.75), q(0, 0, 1.0), q(0, 0, 1.25),
                                            q(0.25, 0, 0.75), q(0, 0.25, 0.75),
                                            q(-0.25, 0, 0.75), q(0, -0.25, 0.75)})},
              {"unseen_states", states_json({q(0, 0, 0.5), q(0.25, 0, 0.5), q(0, 0.25, 0.5),
                                             q(-0.25, 0, 0.5), q(0, -0.25, 0.5)})},
              {"train_table", nullptr}, {"unseen_table", nullptr}, {"write_params", true}};
    }
    case ExperimentKind::minnorm_check:
      return {{"shift_grid", {{2, 2}, {3, 3}, {5, 5}}}, {"random_D", 5}, {"random_H", 5},
              {"n_random", 10}, {"eta", 1e-3}, {"max_iters", 100000}, {"tol", 1e-10},
              {"match_tol", 1e-9}};
  }
  return json::object();
}

// Overlays `user` onto `base`, rejecting keys absent from `base`.
void merge_into(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) fail(path, "expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string field = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) fail(field, "unknown field");
    json& slot = base[it.key()];
    if (slot.is_object() && !slot.empty())
      merge_into(slot, it.value(), field);
    else
      slot = it.value();
  }
}

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  std::string field(const char* key) const { return path_ + "." + key; }
  const json& at(const char* key) const { return j_.at(key); }

  double real(const char* key, double lo = -INFINITY, bool lo_open = false) const {
    const json& v = at(key);
    if (!v.is_number()) fail(field(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(field(key), "must be finite");
    if (lo_open ? !(d > lo) : !(d >= lo))
      fail(field(key), "must be " + std::string(lo_open ? "> " : ">= ") + std::to_string(lo));
    return d;
  }
  long integer(const char* key, long lo) const {
    const json& v = at(key);
    if (!v.is_number_integer()) fail(field(key), "expected an integer");
    const long n = v.get<long>();
    if (n < lo) fail(field(key), "must be >= " + std::to_string(lo));
    return n;
  }
  bool boolean(const char* key) const {
    if (!at(key).is_boolean()) fail(field(key), "expected true or false");
    return at(key).get<bool>();
  }
  std::string string(const char* key) const {
    if (!at(key).is_string()) fail(field(key), "expected a string");
    return at(key).get<std::string>();
  }
  Reader sub(const char* key) const {
    if (!at(key).is_object()) fail(field(key), "expected an object");
    return Reader(at(key), field(key));
  }

 private:
  const json& j_;
  std::string path_;
};

OptimizerConfig read_optimizer(const Reader& r) {
  OptimizerConfig o;
  const std::string kind = r.string("kind");
  if (kind == "gd")
    o.kind = OptimizerKind::gd;
  else if (kind == "adam")
    o.kind = OptimizerKind::adam;
  else
    fail(r.field("kind"), "expected 'gd' or 'adam'");
  o.lr = r.real("lr", 0.0, true);
  o.beta1 = r.real("beta1", 0.0);
  o.beta2 = r.real("beta2", 0.0);
  if (o.beta1 >= 1.0) fail(r.field("beta1"), "must be < 1");
  if (o.beta2 >= 1.0) fail(r.field("beta2"), "must be < 1");
  o.epsilon = r.real("epsilon", 0.0, true);
  o.stop.min_improve = r.real("min_improve", 0.0);
  o.stop.patience_iters = r.integer("patience_iters", 1);
  o.stop.max_iters = r.integer("max_iters", 1);
  return o;
}

std::pair<int, int> read_pair(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
    fail(field, "expected a [D, H] pair of integers");
  const int D = v[0].get<int>(), H = v[1].get<int>();
  if (D < 2) fail(field, "D must be >= 2");
  if (H < 1) fail(field, "H must be >= 1");
  return {D, H};
}

std::vector<Eigen::VectorXd> read_states(const json& v, const std::string& field, int dim) {
  if (!v.is_array() || v.empty()) fail(field, "expected a nonempty list of states");
  std::vector<Eigen::VectorXd> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string f = field + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || static_cast<int>(v[i].size()) != dim)
      fail(f, "expected a list of " + std::to_string(dim) + " numbers");
    Eigen::VectorXd s(dim);
    for (int d = 0; d < dim; ++d) {
      if (!v[i][d].is_number()) fail(f, "expected numbers");
      s(d) = v[i][d].get<double>();
    }
    out.push_back(s);
  }
  return out;
}

std::vector<Eigen::VectorXd> states_from(const json& sec, const char* inline_key,
                                         const char* table_key, const std::string& path,
                                         const std::filesystem::path& base_dir, int dim) {
  const json& table = sec.at(table_key);
  if (!table.is_null()) {
    if (!table.is_string()) fail(path + "." + table_key, "expected a file path or null");
    std::filesystem::path p = table.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    std::vector<Eigen::VectorXd> s;
    try {
      s = load_state_table(p);
    } catch (const std::exception& e) {
      fail(path + "." + table_key, e.what());
    }
    if (s.empty()) fail(path + "." + table_key, "state table is empty");
    if (s.front().size() != dim)
      fail(path + "." + table_key, "states must have " + std::to_string(dim) + " entries");
    return s;
  }
  return read_states(sec.at(inline_key), path + "." + inline_key, dim);
}

void read_section(ExperimentConfig& cfg, const json& sec, const std::string& path,
                  const std::filesystem::path& base_dir) {
  const Reader r(sec, path);
  switch (cfg.kind) {
    case ExperimentKind::lqr_family: {
      auto& c = cfg.lqr;
      const json& fam = sec.at("families");
      if (!fam.is_array() || fam.empty()) fail(r.field("families"), "expected a nonempty list");
      for (const auto& f : fam) {
        if (!f.is_string()) fail(r.field("families"), "expected family names");
        try {
          c.families.push_back(family_kind_from_string(f.get<std::string>()));
        } catch (const std::invalid_argument& e) {
          fail(r.field("families"), e.what());
        }
      }
      c.D = static_cast<int>(r.integer("D", 2));
      c.H = static_cast<int>(r.integer("H", 1));
      c.eta = r.real("eta", 0.0, true);
      c.max_iters = r.integer("max_iters", 1);
      c.tol = r.real("tol", 0.0);
      c.n_train = static_cast<int>(r.integer("n_train", 1));
      if (c.n_train >= c.D) fail(r.field("n_train"), "must be < D (underdetermined)");
      c.n_seeds = static_cast<int>(r.integer("n_seeds", 1));
      break;
    }
    case ExperimentKind::shift_oracle: {
      auto& c = cfg.oracle;
      const json& cases = sec.at("cases");
      if (!cases.is_array() || cases.empty()) fail(r.field("cases"), "expected a nonempty list");
      for (std::size_t i = 0; i < cases.size(); ++i) {
        const std::string f = r.field("cases") + "[" + std::to_string(i) + "]";
        if (!cases[i].is_object()) fail(f, "expected an object with D, H and optional q_diag");
        json item = {{"D", 2}, {"H", 2}, {"q_diag", nullptr}};
        merge_into(item, cases[i], f);
        const Reader ri(item, f);
        OracleCase oc;
        oc.D = static_cast<int>(ri.integer("D", 2));
        oc.H = static_cast<int>(ri.integer("H", 1));
        if (oc.H % oc.D != 0) fail(f + ".H", "must be divisible by D");
        if (!item["q_diag"].is_null()) {
          const json& q = item["q_diag"];
          if (!q.is_array() || static_cast<int>(q.size()) != oc.D)
            fail(f + ".q_diag", "expected D nonnegative numbers");
          Eigen::VectorXd qv(oc.D);
          for (int d = 0; d < oc.D; ++d) {
            if (!q[d].is_number() || q[d].get<double>() < 0.0)
              fail(f + ".q_diag", "expected D nonnegative numbers");
            qv(d) = q[d].get<double>();
          }
          if (qv.sum() <= 0.0) fail(f + ".q_diag", "needs a positive entry");
          oc.q_diag = qv;
        }
        c.cases.push_back(oc);
      }
      c.k_tol = r.real("k_tol", 0.0, true);
      c.ratio_tol = r.real("ratio_tol", 0.0, true);
      break;
    }
    case ExperimentKind::mc_thm5: {
      auto& c = cfg.mc;
      const json& grid = sec.at("grid");
      if (!grid.is_array() || grid.empty()) fail(r.field("grid"), "expected a nonempty list");
      for (std::size_t i = 0; i < grid.size(); ++i)
        c.grid.push_back(read_pair(grid[i], r.field("grid") + "[" + std::to_string(i) + "]"));
      c.n_trials = r.integer("n_trials", 100);
      if (!sec.at("eta").is_null()) c.eta = r.real("eta", 0.0, true);
      for (std::size_t i = 0; i < c.grid.size(); ++i)
        if (!c.eta && c.grid[i].second < 2)
          fail(r.field("grid") + "[" + std::to_string(i) + "]",
               "H must be >= 2 when eta defaults to the step-size bound");
      c.high_prob = r.boolean("high_prob");
      c.high_prob_H = static_cast<int>(r.integer("high_prob_H", 2));
      c.high_prob_delta = r.real("high_prob_delta", 0.0, true);
      if (c.high_prob_delta >= 1.0) fail(r.field("high_prob_delta"), "must be < 1");
      c.high_prob_trials = r.integer("high_prob_trials", 1);
      break;
    }
    case ExperimentKind::pendulum:
    case ExperimentKind::quadcopter: {
      auto& c = cfg.nonlinear;
      const int dim = cfg.kind == ExperimentKind::pendulum ? 2 : 12;
      const Reader net = r.sub("net");
      c.net.depth = static_cast<int>(net.integer("depth", 1));
      c.net.width = static_cast<int>(net.integer("width", 1));
      c.pg_opt = read_optimizer(r.sub("pg_optimizer"));
      c.adv_opt = read_optimizer(r.sub("adv_optimizer"));
      c.jstar_opt = read_optimizer(r.sub("jstar_optimizer"));
      c.lambda = r.real("lambda", 0.0);
      c.n_seeds = static_cast<int>(r.integer("n_seeds", 1));
      c.n_adv_seeds = static_cast<int>(r.integer("n_adv_seeds", 1));
      c.n_jstar_runs = static_cast<int>(r.integer("n_jstar_runs", 1));
      c.horizon = static_cast<int>(r.integer("horizon", 1));
      c.train_states = states_from(sec, "train_states", "train_table", path, base_dir, dim);
      c.unseen_states = states_from(sec, "unseen_states", "unseen_table", path, base_dir, dim);
      c.write_params = r.boolean("write_params");
      break;
    }
    case ExperimentKind::minnorm_check: {
      auto& c = cfg.minnorm;
      const json& grid = sec.at("shift_grid");
      if (!grid.is_array()) fail(r.field("shift_grid"), "expected a list of [D, H] pairs");
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::string f = r.field("shift_grid") + "[" + std::to_string(i) + "]";
        const auto dh = read_pair(grid[i], f);
        if (dh.second % dh.first != 0) fail(f, "H must be divisible by D");
        c.shift_grid.push_back(dh);
      }
      c.random_D = static_cast<int>(r.integer("random_D", 2));
      c.random_H = static_cast<int>(r.integer("random_H", 1));
      c.n_random = static_cast<int>(r.integer("n_random", 0));
      c.eta = r.real("eta", 0.0, true);
      c.max_iters = r.integer("max_iters", 1);
      c.tol = r.real("tol", 0.0);
      c.match_tol = r.real("match_tol", 0.0, true);
      break;
    }
  }
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

ExperimentConfig build(const json& user, const RunOptions& opts,
                       const std::filesystem::path& base_dir) {
  if (!user.is_object()) throw ConfigError("config must be a JSON object");
  if (!user.contains("schema_version")) fail("schema_version", "missing");
  if (!user["schema_version"].is_number_integer() ||
      user["schema_version"].get<int>() != kSchemaVersion)
    fail("schema_version", "unsupported (expected " + std::to_string(kSchemaVersion) + ")");
  if (!user.contains("experiment") || !user["experiment"].is_string())
    fail("experiment", "missing or not a string");

  ExperimentConfig cfg;
  try {
    cfg.kind = experiment_kind_from_string(user["experiment"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    fail("experiment", e.what());
  }
  const std::string name = to_string(cfg.kind);
  json eff = {{"schema_version", kSchemaVersion}, {"experiment", name}, {"seed", 0},
              {name, section_defaults(cfg.kind)}};
  merge_into(eff, user, "");

  if (!eff["seed"].is_number_unsigned() && !(eff["seed"].is_number_integer() &&
                                            eff["seed"].get<long long>() >= 0))
    fail("seed", "expected a nonnegative integer");
  if (opts.seed) eff["seed"] = *opts.seed;
  if (opts.trials) {
    json& sec = eff[name];
    switch (cfg.kind) {
      case ExperimentKind::lqr_family:
      case ExperimentKind::pendulum:
      case ExperimentKind::quadcopter: sec["n_seeds"] = *opts.trials; break;
      case ExperimentKind::mc_thm5: sec["n_trials"] = *opts.trials; break;
      case ExperimentKind::minnorm_check: sec["n_random"] = *opts.trials; break;
      case ExperimentKind::shift_oracle: break;
    }
  }
  if (opts.slow && cfg.kind == ExperimentKind::mc_thm5) eff[name]["high_prob"] = true;

  cfg.seed = eff["seed"].get<std::uint64_t>();
  read_section(cfg, eff[name], name, base_dir);
  cfg.effective_json = eff.dump();
  return cfg;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::lqr_family: return "lqr_family";
    case ExperimentKind::shift_oracle: return "shift_oracle";
    case ExperimentKind::mc_thm5: return "mc_thm5";
    case ExperimentKind::pendulum: return "pendulum";
    case ExperimentKind::quadcopter: return "quadcopter";
    case ExperimentKind::minnorm_check: return "minnorm_check";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (auto k : {ExperimentKind::lqr_family, ExperimentKind::shift_oracle, ExperimentKind::mc_thm5,
                 ExperimentKind::pendulum, ExperimentKind::quadcopter,
                 ExperimentKind::minnorm_check})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown experiment '" + name + "'");
}

ExperimentConfig parse_config(const std::string& text, const RunOptions& opts) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config syntax error at " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) +
                      ": " + e.what());
  }
  return build(user, opts, std::filesystem::current_path());
}

ExperimentConfig load_config(const std::filesystem::path& path, const RunOptions& opts) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  const std::string text = ss.str();
  json user;
  try {
    user = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": syntax error at " +
                      line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
  return build(user, opts, std::filesystem::absolute(path).parent_path());
}

ExperimentConfig default_config(ExperimentKind kind, const RunOptions& opts) {
  return build({{"schema_version", kSchemaVersion}, {"experiment", to_string(kind)}}, opts,
               std::filesystem::current_path());
}

}  // namespace pgx
