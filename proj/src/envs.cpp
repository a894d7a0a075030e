#include "pgx/envs.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/AutoDiff>

namespace pgx {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

template <class T>
using Vec12 = Eigen::Matrix<T, 12, 1>;
template <class T>
using Vec4 = Eigen::Matrix<T, 4, 1>;

// Explicit-Euler quadcopter update, templated so that the same code yields
// values (T = double) and Jacobians (T = dual number).
template <class T>
Vec12<T> quad_update(const QuadcopterParams& p, const Vec12<T>& x, const Vec4<T>& u) {
  using std::cos;
  using std::sin;
  const T sphi = sin(x(3)), cphi = cos(x(3));
  const T sth = sin(x(4)), cth = cos(x(4));
  const T spsi = sin(x(5)), cpsi = cos(x(5));
  const T u1 = u(0) * u(0), u2 = u(1) * u(1), u3 = u(2) * u(2), u4 = u(3) * u(3);
  const T thrust = p.k_f * (u1 + u2 + u3 + u4);

  // Third column of V = Rx(psi) Ry(theta) Rx(phi).
  const T vx = sth * cphi;
  const T vy = -cth * cphi * spsi - sphi * cpsi;
  const T vz = cth * cphi * cpsi - sphi * spsi;

  const double arm = p.k_f * p.l / std::sqrt(2.0);
  const T tx = arm * (u1 + u2 - u3 - u4);
  const T ty = arm * (-u1 + u2 + u3 - u4);
  const T tz = p.k_t * (-u1 + u2 - u3 + u4);

  const T wx = x(9), wy = x(10), wz = x(11);
  const T px = p.inertia(0) * wx, py = p.inertia(1) * wy, pz = p.inertia(2) * wz;
  const T cx = wy * pz - wz * py;
  const T cy = wz * px - wx * pz;
  const T cz = wx * py - wy * px;

  const double dt = p.delta;
  Vec12<T> out;
  for (int i = 0; i < 3; ++i) {
    out(i) = x(i) + dt * x(6 + i);
    out(3 + i) = x(3 + i) + dt * x(9 + i);
  }
  out(6) = x(6) + dt * (thrust * vx / p.m);
  out(7) = x(7) + dt * (thrust * vy / p.m);
  out(8) = x(8) + dt * (thrust * vz / p.m - p.g);
  out(9) = wx + dt * (tx - cx) / p.inertia(0);
  out(10) = wy + dt * (ty - cy) / p.inertia(1);
  out(11) = wz + dt * (tz - cz) / p.inertia(2);
  return out;
}

}  // namespace

PendulumEnv::PendulumEnv(PendulumParams p)
    : NonlinearEnv(Eigen::MatrixXd::Identity(2, 2)), p_(p) {
  require(p_.delta > 0.0, "pendulum delta must be positive");
  require(p_.H >= 0, "horizon must be nonnegative");
}

Eigen::VectorXd PendulumEnv::step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  require(x.size() == 2 && u.size() == 1, "pendulum expects a 2-d state and scalar control");
  return Eigen::Vector2d(x(0) + p_.delta * x(1), x(1) + p_.delta * (u(0) - p_.g * std::sin(x(0))));
}

Eigen::VectorXd PendulumEnv::step_linearized(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                             Eigen::MatrixXd& jx, Eigen::MatrixXd& ju) const {
  jx.resize(2, 2);
  jx << 1.0, p_.delta, -p_.delta * p_.g * std::cos(x(0)), 1.0;
  ju.resize(2, 1);
  ju << 0.0, p_.delta;
  return step(x, u);
}

Eigen::VectorXd PendulumEnv::decoy_target(const Eigen::VectorXd& x0) const {
  require(x0.size() == 2, "pendulum expects a 2-d state");
  return Eigen::Vector2d(x0(0) <= std::numbers::pi ? 0.0 : 2.0 * std::numbers::pi, 0.0);
}

QuadcopterEnv::QuadcopterEnv(QuadcopterParams p)
    : NonlinearEnv(Eigen::MatrixXd(p.alpha.cwiseAbs2().asDiagonal())), p_(p) {
  require(p_.delta > 0.0 && p_.m > 0.0 && p_.max_rpm > 0.0, "invalid quadcopter constants");
  require((p_.inertia.array() > 0.0).all(), "inertia must be positive");
  require(p_.H >= 0, "horizon must be nonnegative");
}

Eigen::VectorXd QuadcopterEnv::target() const {
  Eigen::VectorXd t = Eigen::VectorXd::Zero(12);
  t(2) = 1.0;
  return t;
}

Eigen::VectorXd QuadcopterEnv::step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  require(x.size() == 12 && u.size() == 4, "quadcopter expects a 12-d state and 4 controls");
  require((u.array() >= 0.0).all() && (u.array() <= p_.max_rpm).all(),
          "motor RPM outside [0, max_rpm]");
  return quad_update<double>(p_, x, u);
}

Eigen::VectorXd QuadcopterEnv::step_linearized(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                               Eigen::MatrixXd& jx, Eigen::MatrixXd& ju) const {
  require(x.size() == 12 && u.size() == 4, "quadcopter expects a 12-d state and 4 controls");
  require((u.array() >= 0.0).all() && (u.array() <= p_.max_rpm).all(),
          "motor RPM outside [0, max_rpm]");
  using Dual = Eigen::AutoDiffScalar<Eigen::Matrix<double, 16, 1>>;
  Vec12<Dual> xd;
  Vec4<Dual> ud;
  for (int i = 0; i < 12; ++i) xd(i) = Dual(x(i), 16, i);
  for (int k = 0; k < 4; ++k) ud(k) = Dual(u(k), 16, 12 + k);
  const Vec12<Dual> yd = quad_update<Dual>(p_, xd, ud);
  Eigen::VectorXd y(12);
  jx.resize(12, 12);
  ju.resize(12, 4);
  for (int i = 0; i < 12; ++i) {
    y(i) = yd(i).value();
    jx.row(i) = yd(i).derivatives().head<12>().transpose();
    ju.row(i) = yd(i).derivatives().tail<4>().transpose();
  }
  return y;
}

Eigen::VectorXd QuadcopterEnv::decoy_target(const Eigen::VectorXd& x0) const {
  require(x0.size() == 12, "quadcopter expects a 12-d state");
  return Eigen::VectorXd::Zero(12);
}

double QuadcopterEnv::hover_rpm() const { return std::sqrt(p_.m * p_.g / (4.0 * p_.k_f)); }

Eigen::Matrix3d QuadcopterEnv::rotation(double phi, double theta, double psi) const {
  const double sphi = std::sin(phi), cphi = std::cos(phi);
  const double sth = std::sin(theta), cth = std::cos(theta);
  const double spsi = std::sin(psi), cpsi = std::cos(psi);
  Eigen::Matrix3d V;
  V << cth, sth * sphi, sth * cphi,
       sth * spsi, -cth * sphi * spsi + cphi * cpsi, -cth * cphi * spsi - sphi * cpsi,
       -sth * cpsi, cth * sphi * cpsi + cphi * spsi, cth * cphi * cpsi - sphi * spsi;
  return V;
}

LinearEnv::LinearEnv(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd Q, int H)
    : NonlinearEnv(std::move(Q)), A_(std::move(A)), B_(std::move(B)), H_(H) {
  require(A_.rows() == A_.cols() && B_.rows() == A_.rows(), "A must be square and B match it");
  require(cost_weights().rows() == A_.rows() && cost_weights().cols() == A_.rows(),
          "Q must match A");
  require(H_ >= 0, "horizon must be nonnegative");
}

Eigen::VectorXd LinearEnv::step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  return A_ * x + B_ * u;
}

Eigen::VectorXd LinearEnv::step_linearized(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                           Eigen::MatrixXd& jx, Eigen::MatrixXd& ju) const {
  jx = A_;
  ju = B_;
  return step(x, u);
}

Eigen::VectorXd pendulum_step(const PendulumEnv& env, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u) {
  return env.step(x, u);
}

Eigen::VectorXd quadcopter_step(const QuadcopterEnv& env, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u) {
  return env.step(x, u);
}

}  // namespace pgx
