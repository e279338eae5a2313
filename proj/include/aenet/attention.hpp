#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aenet/layers.hpp"
#include "aenet/tensor.hpp"

namespace aenet {

/// Self-attention over pixel pairs. Q/K/V come from 1×1 convolutions of the
/// input map; each output pixel is the similarity-weighted sum of every
/// pixel's value vector, projected back to the input width and added to the
/// input (residual). Applied at the encoder's output stride.
template <typename T>
struct SpatialAttention {
  std::string name;
  int channels = 0;     // C of the input map
  int qk_channels = 0;  // reduced width of Q and K
  int v_channels = 0;   // width of V (defaults to C)
  Conv2d<T> q_proj, k_proj, v_proj, out_proj;

  // forward caches
  Tensor<T> q_mat, k_mat, v_mat;  // C'×N / C'×N / Cv×N
  Tensor<T> affinity_cache;       // N×N, row-stochastic
  int cache_h = 0, cache_w = 0;

  SpatialAttention() = default;
  /// qk_channels 0 selects max(1, channels/8); v_channels 0 selects channels.
  SpatialAttention(std::string name_, int channels_, int qk_channels_ = 0, int v_channels_ = 0);

  void init(std::uint64_t seed);

  /// The N×N attention map alone (row j holds the weights pixel j assigns).
  Tensor<T> affinity(const Tensor<T>& a);
  Tensor<T> forward(const Tensor<T>& a);
  Tensor<T> backward(const Tensor<T>& gf);
  void params(std::vector<ParamRef<T>>& out);
  void zero_grad();
};

/// Self-attention over channel pairs; parameter-free. Q, K and V are the
/// input map itself reshaped to C×N; the C×C affinity re-weights channels and
/// the result is added to the input.
template <typename T>
struct ChannelAttention {
  Tensor<T> a_mat;            // C×N cache
  Tensor<T> affinity_cache;   // C×C, row-stochastic
  int cache_h = 0, cache_w = 0;

  Tensor<T> affinity(const Tensor<T>& a);
  Tensor<T> forward(const Tensor<T>& a);
  Tensor<T> backward(const Tensor<T>& gf);
};

/// Out-of-place matrix transpose helper (R×C -> C×R).
template <typename T>
Tensor<T> transposed(const Tensor<T>& m);

}  // namespace aenet
