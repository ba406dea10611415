#pragma once

#include <span>
#include <vector>

#include "narz/kernel.hpp"

namespace narz::detail {

/// Pairwise kernel sums over clusters sorted by position.
///
/// Small systems use a full double loop; larger ones restrict each sum to
/// the window of clusters inside the kernel support, and kernels with a
/// trigonometric closed form switch to prefix sums (linear cost).
class InteractionEvaluator {
 public:
  explicit InteractionEvaluator(const Kernel& k) : kernel_(&k) {}

  /// out[c] = sum_d mass[d] omega(x[c] - x[d]).
  void convolution(std::span<const double> x, std::span<const double> mass,
                   std::span<double> out);

  /// out[c] = sum_d mass[d] phi(x[c] - x[d]) (v[d] - v[c]).
  void acceleration(std::span<const double> x, std::span<const double> v,
                    std::span<const double> mass, std::span<double> out);

  static constexpr std::size_t kWindowThreshold = 64;
  static constexpr std::size_t kTrigThreshold = 32;

 private:
  void trig_sums(std::span<const double> x, std::span<const double> v,
                 std::span<const double> mass, bool with_velocity);

  const Kernel* kernel_;
  // Scratch buffers for the prefix-sum path.
  std::vector<double> cos_, sin_;
  std::vector<double> p_m_, p_mc_, p_ms_, p_mv_, p_mvc_, p_mvs_;
};

}  // namespace narz::detail
