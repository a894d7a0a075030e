#pragma once

#include <Eigen/Dense>

namespace pgx {

enum class OutputTransform { identity, tanh_scale };

// How a controller's raw outputs z become controls u.
struct OutputSpec {
  OutputTransform transform = OutputTransform::identity;
  double lo = 0.0;
  double hi = 1.0;
};

// Discrete-time differentiable system with a quadratic stage cost
// (x - t)' W (x - t) against a target t.
class NonlinearEnv {
 public:
  virtual ~NonlinearEnv() = default;

  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual int horizon() const = 0;
  virtual Eigen::VectorXd target() const = 0;
  virtual OutputSpec output_spec() const { return {}; }

  virtual Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const = 0;
  // Next state, with jx = d step / dx and ju = d step / du.
  virtual Eigen::VectorXd step_linearized(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                          Eigen::MatrixXd& jx, Eigen::MatrixXd& ju) const = 0;
  // Decoy target for the adversarial objective at an unseen initial state.
  virtual Eigen::VectorXd decoy_target(const Eigen::VectorXd& x0) const;

  const Eigen::MatrixXd& cost_weights() const { return W_; }
  double stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& t) const {
    const Eigen::VectorXd e = x - t;
    return e.dot(W_ * e);
  }
  Eigen::VectorXd stage_cost_grad(const Eigen::VectorXd& x, const Eigen::VectorXd& t) const {
    return 2.0 * W_ * (x - t);
  }

 protected:
  explicit NonlinearEnv(Eigen::MatrixXd W) : W_(std::move(W)) {}

 private:
  Eigen::MatrixXd W_;
};

}  // namespace pgx
