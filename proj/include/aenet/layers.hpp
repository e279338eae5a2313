#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aenet/gradcheck.hpp"
#include "aenet/image.hpp"
#include "aenet/kernels.hpp"
#include "aenet/tensor.hpp"

namespace aenet {

template <typename T>
struct Conv2d {
  std::string name;
  int in_c = 0, out_c = 0, k = 1, stride = 1, pad = 0;
  bool has_bias = true;
  Tensor<T> w, b, gw, gb;
  Tensor<T> x_cache;

  Conv2d() = default;
  Conv2d(std::string name_, int in_c_, int out_c_, int k_, int stride_ = 1, int pad_ = 0,
         bool bias = true);

  void init_he(std::uint64_t seed);
  void init_identity();  // square 1×1 convs only
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& gy);
  void params(std::vector<ParamRef<T>>& out);
  void zero_grad();
};

template <typename T>
struct BatchNormReLU {
  std::string name;
  int channels = 0;
  T eps = T(1e-5);
  T momentum = T(0.1);
  Tensor<T> gamma, beta, ggamma, gbeta;
  Tensor<T> running_mean, running_var;
  Tensor<T> x_cache, mean_cache, var_cache;
  bool trained_once = false;

  BatchNormReLU() = default;
  BatchNormReLU(std::string name_, int channels_);

  Tensor<T> forward(const Tensor<T>& x, bool training);
  Tensor<T> backward(const Tensor<T>& gy);  // training-mode statistics
  void params(std::vector<ParamRef<T>>& out);
  void zero_grad();
};

template <typename T>
struct ReLU {
  Tensor<T> y_cache;
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& gy);
};

template <typename T>
struct MaxPool2 {
  std::vector<int> argmax;
  int c = 0, h = 0, w = 0;
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& gy);
};

template <typename T>
struct GlobalAvgPool {
  int c = 0, h = 0, w = 0;
  Tensor<T> forward(const Tensor<T>& x);  // C×H×W -> C
  Tensor<T> backward(const Tensor<T>& gy);
};

/// Bilinear resize with explicit target; backward distributes by the forward
/// interpolation weights.
template <typename T>
struct BilinearResize {
  int c = 0, in_h = 0, in_w = 0, out_h = 0, out_w = 0;
  Tensor<T> forward(const Tensor<T>& x, int target_h, int target_w);
  Tensor<T> backward(const Tensor<T>& gy);
};

/// Pixel-wise cross entropy over 2-class logits against a Mask, averaged with
/// optional class weights (defaults give the plain mean).
/// backward() returns d(loss)/d(logits) scaled by `upstream`.
template <typename T>
struct SoftmaxCrossEntropy {
  T weight_cell = T(1);
  T weight_bg = T(1);
  Tensor<T> prob_cache;  // 2×H×W
  const Mask* mask_cache = nullptr;
  T weight_sum_cache = T(0);
  T forward(const Tensor<T>& logits, const Mask& mask);
  Tensor<T> backward(T upstream = T(1));
};

/// Probability of class 0 (cell) from 2×H×W logits, softmax per pixel.
template <typename T>
Tensor<T> cell_probability(const Tensor<T>& logits);

template <typename T>
struct Adam {
  double lr_unused = 0.0;  // lr is passed per step
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<std::vector<T>> m, v;

  void init(const std::vector<ParamRef<T>>& params);
  /// One update; `params[i].grad` holds the gradient. Throws if m/v were not
  /// initialised against the same parameter list.
  void step(const std::vector<ParamRef<T>>& params, double lr);
};

}  // namespace aenet
