#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "pgx/lqr.hpp"

namespace pgx {

enum class FamilyKind { identity, shift, gaussian, gaussian_full };

std::string to_string(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& name);

struct SystemFamily {
  FamilyKind kind = FamilyKind::identity;
  int D = 2;
  int H = 1;
  std::optional<Eigen::VectorXd> q_diag;
  std::optional<std::uint64_t> seed;
};

// identity: A = B = Q = I.  shift: A = A_shift, B = I.  gaussian: A with
// N(0, 1/D) entries, B = Q = I.  gaussian_full: A, B, Z with N(0, 1/D) entries
// and Q = Z Z'.  A diagonal Q may be supplied for every kind but gaussian_full.
LinearLqrProblem build(const SystemFamily& family);

// sum_d e_{d%D+1} e_d'
Eigen::MatrixXd shift_matrix(int D);

// Learning rate (H^2/D + H)^{-1} under which one PG step solves the shift system.
double shift_learning_rate(int D, int H);

// Closed form of the second PG iterate on the shift system with Q = I,
// -B' sum_d (1 - 2(d-1)/(H+D)) e_{d%D+1} e_d'.
Controller shift_k2_closed_form(int D, int H, const Eigen::MatrixXd& B);

struct ShiftRatios {
  double ratio_opt;
  double ratio_cost;
  double bound;  // 4 (D-1)^2 / (H+D)^2
};
ShiftRatios shift_ratio_bounds(int D, int H);

// ||K^(2)||^2 - ||K_no_ext||^2 for the shift system.
double shift_norm_gap(int D, int H);

struct DiagQOracle {
  Eigen::VectorXd alpha;  // alpha(0) corresponds to d = 1 and is always 0
  double ratio_opt;
  double ratio_cost;
  double eta;
};
DiagQOracle shift_diag_q_oracle(int D, int H, const Eigen::VectorXd& q);
// Second PG iterate for Q = diag(q) at the oracle learning rate,
// -B' sum_d (1 - alpha_d) e_{d%D+1} e_d'.
Controller shift_diag_q_k2(int D, int H, const Eigen::VectorXd& q, const Eigen::MatrixXd& B);

// [x0, A x0, ..., A^{D-1} x0]
Eigen::MatrixXd krylov_matrix(const Eigen::MatrixXd& A, const Eigen::VectorXd& x0);

// Fraction of gaussian draws of A (seeds derived from master_seed) whose Krylov
// matrix from e_1 has smallest singular value above sv_tol.
double cyclic_vector_frequency(int D, int n_seeds, std::uint64_t master_seed,
                               double sv_tol = 1e-8);

}  // namespace pgx
