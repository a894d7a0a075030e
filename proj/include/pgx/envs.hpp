#pragma once

#include <numbers>

#include "pgx/env.hpp"

namespace pgx {

struct PendulumParams {
  double delta = 0.05;
  double g = 10.0;
  int H = 100;
};

// Unit-mass, unit-length pendulum, state (theta, theta_dot), scalar torque.
// Target is the upright position (pi, 0).
class PendulumEnv final : public NonlinearEnv {
 public:
  explicit PendulumEnv(PendulumParams p = {});

  const PendulumParams& params() const { return p_; }
  int state_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  int horizon() const override { return p_.H; }
  Eigen::VectorXd target() const override { return Eigen::Vector2d(std::numbers::pi, 0.0); }

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  Eigen::VectorXd step_linearized(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                  Eigen::MatrixXd& jx, Eigen::MatrixXd& ju) const override;
  // (0, 0) if theta_0 <= pi, else (2 pi, 0).
  Eigen::VectorXd decoy_target(const Eigen::VectorXd& x0) const override;

 private:
  PendulumParams p_;
};

struct QuadcopterParams {
  double delta = 0.02;
  double g = 9.81;
  double m = 0.027;
  double l = 0.0397;
  double k_f = 3.16e-10;
  double k_t = 7.94e-12;
  double max_rpm = 21713.71;
  Eigen::Vector3d inertia{1.4e-5, 1.4e-5, 2.17e-5};
  int H = 50;
  // Per-dimension alpha_d; the stage cost weights are alpha_d^2.
  Eigen::Matrix<double, 12, 1> alpha =
      (Eigen::Matrix<double, 12, 1>() << 1, 1, 1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1)
          .finished();
};

// State (x, y, z, phi, theta, psi, and their rates), control = four motor RPMs
// in [0, max_rpm]. Target hovers at (0, 0, 1).
class QuadcopterEnv final : public NonlinearEnv {
 public:
  explicit QuadcopterEnv(QuadcopterParams p = {});

  const QuadcopterParams& params() const { return p_; }
  int state_dim() const override { return 12; }
  int control_dim() const override { return 4; }
  int horizon() const override { return p_.H; }
  Eigen::VectorXd target() const override;
  OutputSpec output_spec() const override {
    return {OutputTransform::tanh_scale, 0.0, p_.max_rpm};
  }

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  Eigen::VectorXd step_linearized(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                  Eigen::MatrixXd& jx, Eigen::MatrixXd& ju) const override;
  // All zeros.
  Eigen::VectorXd decoy_target(const Eigen::VectorXd& x0) const override;

  // Per-motor RPM at which total thrust k_F ||u||^2 equals m g.
  double hover_rpm() const;
  Eigen::Matrix3d rotation(double phi, double theta, double psi) const;

 private:
  QuadcopterParams p_;
};

// x' = A x + B u with stage cost x' Q x and target 0.
class LinearEnv final : public NonlinearEnv {
 public:
  LinearEnv(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd Q, int H);

  int state_dim() const override { return static_cast<int>(A_.rows()); }
  int control_dim() const override { return static_cast<int>(B_.cols()); }
  int horizon() const override { return H_; }
  Eigen::VectorXd target() const override { return Eigen::VectorXd::Zero(A_.rows()); }

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  Eigen::VectorXd step_linearized(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                  Eigen::MatrixXd& jx, Eigen::MatrixXd& ju) const override;

 private:
  Eigen::MatrixXd A_, B_;
  int H_;
};

Eigen::VectorXd pendulum_step(const PendulumEnv& env, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u);
Eigen::VectorXd quadcopter_step(const QuadcopterEnv& env, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u);

}  // namespace pgx
