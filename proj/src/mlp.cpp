#include "pgx/mlp.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "pgx/rng.hpp"

namespace pgx {

namespace {

constexpr std::array<char, 8> kMagic = {'P', 'G', 'X', 'M', 'L', 'P', '0', '1'};

constexpr Eigen::Index kNarrow = 3;

// out = M * X; column-wise matvecs beat a general product for narrow batches.
template <typename Lhs>
void mul_cols(const Lhs& M, const Eigen::MatrixXd& X, Eigen::MatrixXd& out) {
  out.resize(M.rows(), X.cols());
  if (X.cols() > kNarrow) {
    out.noalias() = M * X;
    return;
  }
  for (Eigen::Index j = 0; j < X.cols(); ++j) out.col(j).noalias() = M * X.col(j);
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  os.write(reinterpret_cast<const char*>(b.data()), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> b;
  is.read(reinterpret_cast<char*>(b.data()), sizeof(T));
  if (!is) throw std::runtime_error("parameter file is truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

}  // namespace

MlpController::MlpController(std::vector<int> layer_dims, OutputSpec output)
    : dims_(std::move(layer_dims)), output_(output) {
  require(dims_.size() >= 2, "an MLP needs at least an input and an output dimension");
  for (int d : dims_) require(d >= 1, "layer dimensions must be positive");
  if (output_.transform == OutputTransform::tanh_scale)
    require(output_.lo < output_.hi, "tanh_scale needs lo < hi");
  Eigen::Index off = 0;
  for (int l = 0; l < num_layers(); ++l) {
    offsets_.push_back(off);
    off += static_cast<Eigen::Index>(dims_[l] + 1) * dims_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(off);
}

Eigen::Index MlpController::param_count(const std::vector<int>& layer_dims) {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l)
    n += static_cast<Eigen::Index>(layer_dims[l] + 1) * layer_dims[l + 1];
  return n;
}

MlpController MlpController::init(std::vector<int> layer_dims, OutputSpec output,
                                  std::uint64_t seed) {
  MlpController c(std::move(layer_dims), output);
  CounterRng rng(seed);
  for (int l = 0; l < c.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(c.dims_[l]));
    const Eigen::Index n = static_cast<Eigen::Index>(c.dims_[l] + 1) * c.dims_[l + 1];
    for (Eigen::Index i = 0; i < n; ++i)
      c.params_(c.offsets_[l] + i) = bound * (2.0 * rng.uniform() - 1.0);
  }
  return c;
}

void MlpController::set_params(const Eigen::VectorXd& p) {
  require(p.size() == params_.size(), "parameter vector has the wrong length");
  params_ = p;
}

Eigen::Map<const Eigen::MatrixXd> MlpController::weight(int l) const {
  return {params_.data() + weight_offset(l), dims_[l + 1], dims_[l]};
}

Eigen::Map<const Eigen::VectorXd> MlpController::bias(int l) const {
  return {params_.data() + bias_offset(l), dims_[l + 1]};
}

Eigen::MatrixXd MlpController::apply_output(const Eigen::MatrixXd& z) const {
  if (output_.transform == OutputTransform::identity) return z;
  const double half = 0.5 * (output_.hi - output_.lo);
  Eigen::MatrixXd u = ((z.array().tanh() + 1.0) * half + output_.lo).matrix();
  return u.cwiseMax(output_.lo).cwiseMin(output_.hi);
}

Eigen::VectorXd MlpController::forward(const Eigen::VectorXd& x) const {
  return forward_batch(x);
}

Eigen::MatrixXd MlpController::forward_batch(const Eigen::MatrixXd& X) const {
  require(X.rows() == input_dim(), "input dimension does not match the controller");
  Eigen::MatrixXd a = X;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weight(l) * a;
    z.colwise() += bias(l);
    a = (l + 1 < num_layers()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return apply_output(a);
}

Eigen::MatrixXd MlpController::forward_batch(const Eigen::MatrixXd& X, MlpCache& cache) const {
  require(X.rows() == input_dim(), "input dimension does not match the controller");
  cache.inputs.resize(num_layers());
  cache.pre.resize(num_layers());
  cache.inputs[0] = X;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd& z = cache.pre[l];
    mul_cols(weight(l), cache.inputs[l], z);
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) cache.inputs[l + 1] = z.cwiseMax(0.0);
  }
  return apply_output(cache.pre.back());
}

Eigen::MatrixXd MlpController::backward(const MlpCache& cache, const Eigen::MatrixXd& dU,
                                        Eigen::Ref<Eigen::VectorXd> grad) const {
  std::vector<Eigen::MatrixXd> deltas;
  Eigen::MatrixXd dX = backward_deltas(cache, dU, deltas);
  accumulate_grad(cache.inputs, deltas, grad);
  return dX;
}

Eigen::MatrixXd MlpController::backward_deltas(const MlpCache& cache, const Eigen::MatrixXd& dU,
                                               std::vector<Eigen::MatrixXd>& deltas) const {
  const int L = num_layers();
  require(dU.rows() == output_dim() && dU.cols() == cache.pre.back().cols(),
          "output gradient does not match the cached batch");
  deltas.resize(L);
  deltas[L - 1] = dU;
  if (output_.transform == OutputTransform::tanh_scale) {
    const double half = 0.5 * (output_.hi - output_.lo);
    deltas[L - 1].array() *= (1.0 - cache.pre.back().array().tanh().square()) * half;
  }
  Eigen::MatrixXd da;
  for (int l = L - 1; l >= 0; --l) {
    mul_cols(weight(l).transpose(), deltas[l], da);
    if (l == 0) break;
    // ReLU derivative, taken as 0 at 0.
    deltas[l - 1] = (cache.pre[l - 1].array() > 0.0).select(da, 0.0);
  }
  return da;
}

void MlpController::accumulate_grad(const std::vector<Eigen::MatrixXd>& inputs,
                                    const std::vector<Eigen::MatrixXd>& deltas,
                                    Eigen::Ref<Eigen::VectorXd> grad) const {
  require(grad.size() == params_.size(), "gradient buffer has the wrong length");
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::Map<Eigen::MatrixXd> gW(grad.data() + weight_offset(l), dims_[l + 1], dims_[l]);
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + bias_offset(l), dims_[l + 1]);
    gW.noalias() += deltas[l] * inputs[l].transpose();
    gb += deltas[l].rowwise().sum();
  }
}

void save_params(const std::filesystem::path& path, const MlpController& ctrl) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(ctrl.layer_dims().size()));
  for (int d : ctrl.layer_dims()) put_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  for (Eigen::Index i = 0; i < ctrl.param_count(); ++i) put_le<double>(os, ctrl.params()(i));
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

MlpController load_params(const std::filesystem::path& path, OutputSpec output) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw std::runtime_error(path.string() + " is not a parameter file");
  const auto n = get_le<std::uint32_t>(is);
  if (n < 2 || n > 1024) throw std::runtime_error("implausible layer count in " + path.string());
  std::vector<int> dims(n);
  for (auto& d : dims) d = static_cast<int>(get_le<std::uint32_t>(is));
  MlpController c(dims, output);
  for (Eigen::Index i = 0; i < c.param_count(); ++i) c.params()(i) = get_le<double>(is);
  if (is.peek() != std::char_traits<char>::eof())
    throw std::runtime_error("trailing bytes in " + path.string());
  return c;
}

}  // namespace pgx
