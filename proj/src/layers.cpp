#include "aenet/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace aenet {

template <typename T>
Conv2d<T>::Conv2d(std::string name_, int in_c_, int out_c_, int k_, int stride_, int pad_,
                  bool bias)
    : name(std::move(name_)),
      in_c(in_c_),
      out_c(out_c_),
      k(k_),
      stride(stride_),
      pad(pad_),
      has_bias(bias) {
  if (k < 1 || out_c < 1 || in_c < 1) throw std::invalid_argument("conv2d: bad dimensions");
  w = Tensor<T>({out_c, in_c, k, k});
  gw = Tensor<T>({out_c, in_c, k, k});
  if (has_bias) {
    b = Tensor<T>({out_c});
    gb = Tensor<T>({out_c});
  }
}

template <typename T>
void Conv2d<T>::init_he(std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, name));
  const double fan_in = static_cast<double>(in_c) * k * k;
  fill_normal(w, std::sqrt(2.0 / fan_in), rng);
  if (has_bias) std::fill(b.values.begin(), b.values.end(), T(0));
}

template <typename T>
void Conv2d<T>::init_identity() {
  if (k != 1 || in_c != out_c)
    throw std::logic_error("conv2d: identity init needs a square 1x1 kernel");
  std::fill(w.values.begin(), w.values.end(), T(0));
  for (int c = 0; c < out_c; ++c) w.values[static_cast<std::size_t>(c) * in_c + c] = T(1);
  if (has_bias) std::fill(b.values.begin(), b.values.end(), T(0));
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) {
  if (x.ndim() != 3 || x.dim(0) != in_c)
    throw std::invalid_argument("conv2d " + name + ": channel mismatch");
  kernels::Conv2dDims d{in_c, x.dim(1), x.dim(2), out_c, k, k, stride, pad};
  if (d.out_h() <= 0 || d.out_w() <= 0)
    throw std::invalid_argument("conv2d " + name + ": zero-size output");
  x_cache = x;
  Tensor<T> y({out_c, d.out_h(), d.out_w()});
  kernels::conv2d_forward(x.data(), w.data(), has_bias ? b.data() : nullptr, y.data(), d);
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& gy) {
  kernels::Conv2dDims d{in_c, x_cache.dim(1), x_cache.dim(2), out_c, k, k, stride, pad};
  Tensor<T> gx(x_cache.shape);
  kernels::conv2d_backward_input(gy.data(), w.data(), gx.data(), d);
  kernels::conv2d_backward_params(gy.data(), x_cache.data(), gw.data(),
                                  has_bias ? gb.data() : nullptr, d);
  return gx;
}

template <typename T>
void Conv2d<T>::params(std::vector<ParamRef<T>>& out) {
  out.push_back({name + ".w", &w, &gw});
  if (has_bias) out.push_back({name + ".b", &b, &gb});
}

template <typename T>
void Conv2d<T>::zero_grad() {
  std::fill(gw.values.begin(), gw.values.end(), T(0));
  if (has_bias) std::fill(gb.values.begin(), gb.values.end(), T(0));
}

template <typename T>
BatchNormReLU<T>::BatchNormReLU(std::string name_, int channels_)
    : name(std::move(name_)), channels(channels_) {
  gamma = Tensor<T>::full({channels}, T(1));
  beta = Tensor<T>({channels});
  ggamma = Tensor<T>({channels});
  gbeta = Tensor<T>({channels});
  running_mean = Tensor<T>({channels});
  running_var = Tensor<T>::full({channels}, T(1));
}

template <typename T>
Tensor<T> BatchNormReLU<T>::forward(const Tensor<T>& x, bool training) {
  if (x.ndim() != 3 || x.dim(0) != channels)
    throw std::invalid_argument("batch_norm " + name + ": channel mismatch");
  const int hw = x.dim(1) * x.dim(2);
  Tensor<T> y(x.shape);
  if (training) {
    x_cache = x;
    mean_cache = Tensor<T>({channels});
    var_cache = Tensor<T>({channels});
    kernels::bn_relu_forward_train(x.data(), gamma.data(), beta.data(), eps, mean_cache.data(),
                                   var_cache.data(), y.data(), channels, hw);
    for (int c = 0; c < channels; ++c) {
      running_mean.values[c] =
          (T(1) - momentum) * running_mean.values[c] + momentum * mean_cache.values[c];
      running_var.values[c] =
          (T(1) - momentum) * running_var.values[c] + momentum * var_cache.values[c];
    }
    trained_once = true;
  } else {
    kernels::bn_relu_forward_eval(x.data(), gamma.data(), beta.data(), running_mean.data(),
                                  running_var.data(), eps, y.data(), channels, hw);
  }
  return y;
}

template <typename T>
Tensor<T> BatchNormReLU<T>::backward(const Tensor<T>& gy) {
  const int hw = x_cache.dim(1) * x_cache.dim(2);
  Tensor<T> gx(x_cache.shape);
  kernels::bn_relu_backward_train(x_cache.data(), gamma.data(), beta.data(), mean_cache.data(),
                                  var_cache.data(), eps, gy.data(), gx.data(), ggamma.data(),
                                  gbeta.data(), channels, hw);
  return gx;
}

template <typename T>
void BatchNormReLU<T>::params(std::vector<ParamRef<T>>& out) {
  out.push_back({name + ".gamma", &gamma, &ggamma});
  out.push_back({name + ".beta", &beta, &gbeta});
}

template <typename T>
void BatchNormReLU<T>::zero_grad() {
  std::fill(ggamma.values.begin(), ggamma.values.end(), T(0));
  std::fill(gbeta.values.begin(), gbeta.values.end(), T(0));
}

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x) {
  Tensor<T> y(x.shape);
  kernels::relu_forward(x.data(), y.data(), x.numel());
  y_cache = y;
  return y;
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& gy) {
  Tensor<T> gx(y_cache.shape);
  kernels::relu_backward(y_cache.data(), gy.data(), gx.data(), gy.numel());
  return gx;
}

template <typename T>
Tensor<T> MaxPool2<T>::forward(const Tensor<T>& x) {
  c = x.dim(0);
  h = x.dim(1);
  w = x.dim(2);
  argmax.assign(static_cast<std::size_t>(c) * (h / 2) * (w / 2), 0);
  Tensor<T> y({c, h / 2, w / 2});
  kernels::maxpool2_forward(x.data(), y.data(), argmax.data(), c, h, w);
  return y;
}

template <typename T>
Tensor<T> MaxPool2<T>::backward(const Tensor<T>& gy) {
  Tensor<T> gx({c, h, w});
  kernels::maxpool2_backward(gy.data(), argmax.data(), gx.data(), c, h, w);
  return gx;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(const Tensor<T>& x) {
  c = x.dim(0);
  h = x.dim(1);
  w = x.dim(2);
  Tensor<T> y({c});
  kernels::global_avg_pool(x.data(), y.data(), c, h * w);
  return y;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T>& gy) {
  Tensor<T> gx({c, h, w});
  kernels::global_avg_pool_backward(gy.data(), gx.data(), c, h * w);
  return gx;
}

template <typename T>
Tensor<T> BilinearResize<T>::forward(const Tensor<T>& x, int target_h, int target_w) {
  c = x.dim(0);
  in_h = x.dim(1);
  in_w = x.dim(2);
  out_h = target_h;
  out_w = target_w;
  Tensor<T> y({c, out_h, out_w});
  kernels::bilinear_resize(x.data(), y.data(), c, in_h, in_w, out_h, out_w);
  return y;
}

template <typename T>
Tensor<T> BilinearResize<T>::backward(const Tensor<T>& gy) {
  Tensor<T> gx({c, in_h, in_w});
  kernels::bilinear_resize_backward(gy.data(), gx.data(), c, in_h, in_w, out_h, out_w);
  return gx;
}

template <typename T>
T SoftmaxCrossEntropy<T>::forward(const Tensor<T>& logits, const Mask& mask) {
  if (logits.ndim() != 3 || logits.dim(0) != 2)
    throw std::invalid_argument("loss: logits must be 2×H×W");
  if (logits.dim(1) != mask.h || logits.dim(2) != mask.w)
    throw std::invalid_argument("loss: logits/mask shape mismatch");
  const std::size_t n = mask.size();
  for (std::uint8_t v : mask.labels)
    if (v > 1) throw std::invalid_argument("loss: mask labels must be 0 or 1");
  prob_cache = Tensor<T>(logits.shape);
  mask_cache = &mask;
  const T* l0 = logits.data();
  const T* l1 = logits.data() + n;
  T* p0 = prob_cache.data();
  T* p1 = prob_cache.data() + n;
  double total = 0.0;
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const T m = std::max(l0[i], l1[i]);
    const T e0 = std::exp(l0[i] - m);
    const T e1 = std::exp(l1[i] - m);
    const T inv = T(1) / (e0 + e1);
    p0[i] = e0 * inv;
    p1[i] = e1 * inv;
    const bool cell = mask.labels[i] == 0;
    const double wt = static_cast<double>(cell ? weight_cell : weight_bg);
    const T pt = cell ? p0[i] : p1[i];
    total -= wt * std::log(static_cast<double>(pt) + 1e-30);
    wsum += wt;
  }
  weight_sum_cache = static_cast<T>(wsum);
  return static_cast<T>(total / wsum);
}

template <typename T>
Tensor<T> SoftmaxCrossEntropy<T>::backward(T upstream) {
  const std::size_t n = mask_cache->size();
  Tensor<T> g(prob_cache.shape);
  const T scale = upstream / weight_sum_cache;
  const T* p0 = prob_cache.data();
  const T* p1 = prob_cache.data() + n;
  T* g0 = g.data();
  T* g1 = g.data() + n;
  for (std::size_t i = 0; i < n; ++i) {
    const bool cell = mask_cache->labels[i] == 0;
    const T wt = (cell ? weight_cell : weight_bg) * scale;
    g0[i] = (p0[i] - (cell ? T(1) : T(0))) * wt;
    g1[i] = (p1[i] - (cell ? T(0) : T(1))) * wt;
  }
  return g;
}

template <typename T>
Tensor<T> cell_probability(const Tensor<T>& logits) {
  if (logits.ndim() != 3 || logits.dim(0) != 2)
    throw std::invalid_argument("cell_probability: logits must be 2×H×W");
  const int h = logits.dim(1), w = logits.dim(2);
  const std::size_t n = static_cast<std::size_t>(h) * w;
  Tensor<T> p({1, h, w});
  const T* l0 = logits.data();
  const T* l1 = logits.data() + n;
  T* out = p.data();
  const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < nn; ++i) {
    const T m = std::max(l0[i], l1[i]);
    const T e0 = std::exp(l0[i] - m);
    const T e1 = std::exp(l1[i] - m);
    out[i] = e0 / (e0 + e1);
  }
  return p;
}

template <typename T>
void Adam<T>::init(const std::vector<ParamRef<T>>& params) {
  t = 0;
  m.clear();
  v.clear();
  for (const auto& p : params) {
    m.emplace_back(p.value->numel(), T(0));
    v.emplace_back(p.value->numel(), T(0));
  }
}

template <typename T>
void Adam<T>::step(const std::vector<ParamRef<T>>& params, double lr) {
  if (m.size() != params.size()) throw std::logic_error("adam: parameter list changed");
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    T* val = params[pi].value->data();
    const T* g = params[pi].grad->data();
    T* mp = m[pi].data();
    T* vp = v[pi].data();
    const std::size_t n = params[pi].value->numel();
    if (n != m[pi].size()) throw std::logic_error("adam: parameter shape changed");
    for (std::size_t i = 0; i < n; ++i) {
      mp[i] = static_cast<T>(beta1 * mp[i] + (1.0 - beta1) * g[i]);
      vp[i] = static_cast<T>(beta2 * vp[i] + (1.0 - beta2) * g[i] * g[i]);
      const double mhat = mp[i] / bc1;
      const double vhat = vp[i] / bc2;
      val[i] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + eps));
    }
  }
}

#define AENET_INSTANTIATE_LAYERS(T)             \
  template struct Conv2d<T>;                    \
  template struct BatchNormReLU<T>;             \
  template struct ReLU<T>;                      \
  template struct MaxPool2<T>;                  \
  template struct GlobalAvgPool<T>;             \
  template struct BilinearResize<T>;            \
  template struct SoftmaxCrossEntropy<T>;       \
  template Tensor<T> cell_probability<T>(const Tensor<T>&); \
  template struct Adam<T>;

AENET_INSTANTIATE_LAYERS(float)
AENET_INSTANTIATE_LAYERS(double)

}  // namespace aenet
