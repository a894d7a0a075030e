#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Dense>

namespace pgx {

// Philox-4x32-10 block function (Salmon et al., counter-based RNG).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// SplitMix64 finalizer applied to (master, index); used to derive independent
// per-trial seeds that do not depend on scheduling order.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index);

// Bit-reproducible stream of uniforms and standard normals. The key is the
// seed, the counter advances by one block per four 32-bit words consumed.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform();
  // Standard normal via the Box-Muller transform.
  double normal();

  Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev);
  Eigen::VectorXd gaussian_vector(Eigen::Index n, double stddev);

  std::uint64_t seed() const { return seed_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pgx
