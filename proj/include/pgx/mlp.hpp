#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "pgx/env.hpp"

namespace pgx {

// Per-layer values recorded by a batched forward pass, one column per state.
struct MlpCache {
  std::vector<Eigen::MatrixXd> inputs;  // inputs[l] feeds layer l; inputs[0] is the state
  std::vector<Eigen::MatrixXd> pre;     // pre-activations z_l = W_l inputs[l] + b_l
};

// Fully connected network, ReLU on hidden layers. Parameters are stored flat,
// layer by layer: W_l (d_out x d_in, column-major) followed by b_l.
class MlpController {
 public:
  MlpController(std::vector<int> layer_dims, OutputSpec output = {});

  // Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static MlpController init(std::vector<int> layer_dims, OutputSpec output, std::uint64_t seed);

  const std::vector<int>& layer_dims() const { return dims_; }
  int num_layers() const { return static_cast<int>(dims_.size()) - 1; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  const OutputSpec& output() const { return output_; }
  Eigen::Index param_count() const { return params_.size(); }
  static Eigen::Index param_count(const std::vector<int>& layer_dims);

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  void set_params(const Eigen::VectorXd& p);

  Eigen::Map<const Eigen::MatrixXd> weight(int l) const;
  Eigen::Map<const Eigen::VectorXd> bias(int l) const;
  Eigen::Index weight_offset(int l) const { return offsets_[l]; }
  Eigen::Index bias_offset(int l) const { return offsets_[l] + dims_[l + 1] * dims_[l]; }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& X, MlpCache& cache) const;

  // Given dL/du for the batch of a cached forward pass, adds dL/dparams into
  // grad and returns dL/dx.
  Eigen::MatrixXd backward(const MlpCache& cache, const Eigen::MatrixXd& dU,
                           Eigen::Ref<Eigen::VectorXd> grad) const;

  // The two halves of backward. backward_deltas fills deltas[l] = dL/dz_l and
  // returns dL/dx; accumulate_grad adds sum_j deltas[l].col(j) inputs[l].col(j)^T.
  // Column blocks from many passes may be stacked before a single accumulate.
  Eigen::MatrixXd backward_deltas(const MlpCache& cache, const Eigen::MatrixXd& dU,
                                  std::vector<Eigen::MatrixXd>& deltas) const;
  void accumulate_grad(const std::vector<Eigen::MatrixXd>& inputs,
                       const std::vector<Eigen::MatrixXd>& deltas,
                       Eigen::Ref<Eigen::VectorXd> grad) const;

 private:
  Eigen::MatrixXd apply_output(const Eigen::MatrixXd& z) const;

  std::vector<int> dims_;
  OutputSpec output_;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd params_;
};

// Binary layout: 8-byte magic "PGXMLP01", uint32 count of layer dims, that many
// uint32 dims, then the parameters as float64. All little-endian.
void save_params(const std::filesystem::path& path, const MlpController& ctrl);
MlpController load_params(const std::filesystem::path& path, OutputSpec output = {});

}  // namespace pgx
