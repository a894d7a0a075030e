#include "pgx/gallery.hpp"

#include <cmath>
#include <stdexcept>

#include "pgx/rng.hpp"

namespace pgx {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void require_divisible(int D, int H) {
  require(D >= 2, "D must be at least 2");
  require(H >= 1 && H % D == 0, "shift oracles require H divisible by D");
}

// 0-based index of e_{d%D+1} for 1-based d.
int next_index(int d, int D) { return d % D; }

}  // namespace

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::identity: return "identity";
    case FamilyKind::shift: return "shift";
    case FamilyKind::gaussian: return "gaussian";
    case FamilyKind::gaussian_full: return "gaussian_full";
  }
  return "?";
}

FamilyKind family_kind_from_string(const std::string& name) {
  for (auto k : {FamilyKind::identity, FamilyKind::shift, FamilyKind::gaussian,
                 FamilyKind::gaussian_full})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown system family '" + name + "'");
}

LinearLqrProblem build(const SystemFamily& f) {
  require(f.D >= 2, "D must be at least 2");
  require(f.H >= 1, "H must be at least 1");
  const int D = f.D;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(D, D);
  Eigen::MatrixXd Q = I;
  if (f.q_diag) {
    require(f.kind != FamilyKind::gaussian_full, "gaussian_full draws its own Q");
    require(f.q_diag->size() == D, "q_diag length does not match D");
    require((f.q_diag->array() >= 0.0).all(), "q_diag entries must be nonnegative");
    Q = f.q_diag->asDiagonal();
  }
  const bool random = f.kind == FamilyKind::gaussian || f.kind == FamilyKind::gaussian_full;
  require(!random || f.seed.has_value(), to_string(f.kind) + " family requires a seed");
  const double sd = 1.0 / std::sqrt(static_cast<double>(D));
  switch (f.kind) {
    case FamilyKind::identity:
      return LinearLqrProblem(I, I, Q, f.H);
    case FamilyKind::shift:
      return LinearLqrProblem(shift_matrix(D), I, Q, f.H);
    case FamilyKind::gaussian: {
      CounterRng rng(*f.seed, 0);
      return LinearLqrProblem(rng.gaussian_matrix(D, D, sd), I, Q, f.H);
    }
    case FamilyKind::gaussian_full: {
      Eigen::MatrixXd A = CounterRng(*f.seed, 0).gaussian_matrix(D, D, sd);
      Eigen::MatrixXd B = CounterRng(*f.seed, 1).gaussian_matrix(D, D, sd);
      const Eigen::MatrixXd Z = CounterRng(*f.seed, 2).gaussian_matrix(D, D, sd);
      Eigen::MatrixXd ZZ = Z * Z.transpose();
      ZZ = 0.5 * (ZZ + ZZ.transpose()).eval();
      return LinearLqrProblem(std::move(A), std::move(B), std::move(ZZ), f.H);
    }
  }
  throw std::invalid_argument("invalid system family");
}

Eigen::MatrixXd shift_matrix(int D) {
  require(D >= 2, "D must be at least 2");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(D, D);
  for (int d = 1; d <= D; ++d) A(next_index(d, D), d - 1) = 1.0;
  return A;
}

double shift_learning_rate(int D, int H) {
  require(D >= 1 && H >= 1, "D and H must be positive");
  return 1.0 / (static_cast<double>(H) * H / D + H);
}

Controller shift_k2_closed_form(int D, int H, const Eigen::MatrixXd& B) {
  require_divisible(D, H);
  require(B.rows() == D && B.cols() == D, "B must be D x D");
  require((B.transpose() * B - Eigen::MatrixXd::Identity(D, D)).norm() <= 1e-10,
          "B must be orthogonal");
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(D, D);
  for (int d = 1; d <= D; ++d)
    S(next_index(d, D), d - 1) = 1.0 - 2.0 * (d - 1) / static_cast<double>(H + D);
  return {-B.transpose() * S};
}

ShiftRatios shift_ratio_bounds(int D, int H) {
  require_divisible(D, H);
  const double hd2 = static_cast<double>(H + D) * (H + D);
  double opt = 0.0;
  for (int d = 2; d <= D; ++d) opt += static_cast<double>(d - 1) * (d - 1);
  opt = 4.0 * opt / ((D - 1) * hd2);

  double num = 0.0, den = 0.0;
  for (int d = 2; d <= D; ++d) {
    double prod = 1.0;
    for (int h = 1; h <= D - d + 1; ++h) {
      const int dp = h + d - 1;
      prod *= 4.0 * (dp - 1) * (dp - 1) / hd2;
      num += prod;
    }
    den += D - d + 1;
  }
  return {opt, num / den, 4.0 * (D - 1) * (D - 1) / hd2};
}

double shift_norm_gap(int D, int H) {
  require_divisible(D, H);
  double gap = 0.0;
  for (int d = 2; d <= D; ++d) {
    const double c = 1.0 - 2.0 * (d - 1) / static_cast<double>(H + D);
    gap += c * c;
  }
  return gap;
}

DiagQOracle shift_diag_q_oracle(int D, int H, const Eigen::VectorXd& q) {
  require_divisible(D, H);
  require(q.size() == D, "q length does not match D");
  require((q.array() >= 0.0).all(), "q entries must be nonnegative");
  const double qsum = q.sum();
  require(qsum > 0.0, "q must have a positive entry");
  const double hd = static_cast<double>(H) / D;

  DiagQOracle out;
  out.alpha = Eigen::VectorXd::Zero(D);
  double partial = 0.0;
  for (int d = 2; d <= D; ++d) {
    partial += q(d - 1);
    out.alpha(d - 1) = 2.0 * partial / ((hd + 1.0) * qsum);
  }
  out.eta = 1.0 / (hd * (hd + 1.0) * qsum);

  // q_{d%D+1} in 1-based notation is q(next_index(d, D)).
  double opt_num = 0.0, opt_den = 0.0;
  for (int d = 2; d <= D; ++d) {
    const double w = q(next_index(d, D));
    opt_num += w * out.alpha(d - 1) * out.alpha(d - 1);
    opt_den += w;
  }
  double cost_num = 0.0, cost_den = 0.0;
  for (int d = 2; d <= D; ++d) {
    double prod = 1.0;
    for (int h = 1; h <= D - d + 1; ++h) {
      const int dp = h + d - 1;
      prod *= out.alpha(dp - 1) * out.alpha(dp - 1);
      const double w = q(next_index(dp, D));
      cost_num += w * prod;
      cost_den += w;
    }
  }
  out.ratio_opt = opt_den > 0.0 ? opt_num / opt_den : 0.0;
  out.ratio_cost = cost_den > 0.0 ? cost_num / cost_den : 0.0;
  return out;
}

Controller shift_diag_q_k2(int D, int H, const Eigen::VectorXd& q, const Eigen::MatrixXd& B) {
  const DiagQOracle o = shift_diag_q_oracle(D, H, q);
  require(B.rows() == D && B.cols() == D, "B must be D x D");
  require((B.transpose() * B - Eigen::MatrixXd::Identity(D, D)).norm() <= 1e-10,
          "B must be orthogonal");
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(D, D);
  for (int d = 1; d <= D; ++d) S(next_index(d, D), d - 1) = 1.0 - o.alpha(d - 1);
  return {-B.transpose() * S};
}

Eigen::MatrixXd krylov_matrix(const Eigen::MatrixXd& A, const Eigen::VectorXd& x0) {
  require(A.rows() == A.cols() && A.rows() == x0.size(), "dimension mismatch");
  const auto D = A.rows();
  Eigen::MatrixXd Kr(D, D);
  Kr.col(0) = x0;
  for (Eigen::Index j = 1; j < D; ++j) Kr.col(j) = A * Kr.col(j - 1);
  return Kr;
}

double cyclic_vector_frequency(int D, int n_seeds, std::uint64_t master_seed, double sv_tol) {
  require(D >= 2 && n_seeds >= 1, "need D >= 2 and at least one seed");
  const double sd = 1.0 / std::sqrt(static_cast<double>(D));
  int full = 0;
  for (int i = 0; i < n_seeds; ++i) {
    CounterRng rng(mix_seed(master_seed, static_cast<std::uint64_t>(i)));
    const Eigen::MatrixXd A = rng.gaussian_matrix(D, D, sd);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(krylov_matrix(A, Eigen::VectorXd::Unit(D, 0)));
    if (svd.singularValues().minCoeff() > sv_tol) ++full;
  }
  return static_cast<double>(full) / n_seeds;
}

}  // namespace pgx
