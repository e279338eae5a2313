#include "aenet/kernels.hpp"

#include <omp.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace aenet::kernels {

namespace {
// parallel and serial kernels are bit-identical, so dropping to the serial
// reference on a single-thread runtime is purely a performance choice
std::atomic<bool> g_parallel{omp_get_max_threads() > 1};
}

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) {
  g_parallel.store(on && omp_get_max_threads() > 1, std::memory_order_relaxed);
}

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y, const Conv2dDims& d) {
  if (d.out_h() <= 0 || d.out_w() <= 0) throw std::invalid_argument("conv2d: zero-size output");
  if (parallel_enabled())
    par::conv2d_forward(x, w, bias, y, d);
  else
    serial::conv2d_forward(x, w, bias, y, d);
}

template <typename T>
void conv2d_backward_input(const T* gy, const T* w, T* gx, const Conv2dDims& d) {
  if (parallel_enabled())
    par::conv2d_backward_input(gy, w, gx, d);
  else
    serial::conv2d_backward_input(gy, w, gx, d);
}

template <typename T>
void conv2d_backward_params(const T* gy, const T* x, T* gw, T* gb, const Conv2dDims& d) {
  if (parallel_enabled())
    par::conv2d_backward_params(gy, x, gw, gb, d);
  else
    serial::conv2d_backward_params(gy, x, gw, gb, d);
}

template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n) {
  if (parallel_enabled())
    par::matmul(a, b, c, m, k, n);
  else
    serial::matmul(a, b, c, m, k, n);
}

template <typename T>
void softmax_rows(const T* x, T* y, int rows, int cols) {
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(static_cast<double>(x[i])))
      throw std::invalid_argument("softmax_rows: non-finite input");
  if (parallel_enabled())
    par::softmax_rows(x, y, rows, cols);
  else
    serial::softmax_rows(x, y, rows, cols);
}

template <typename T>
void softmax_rows_backward(const T* y, const T* gy, T* gx, int rows, int cols) {
  if (parallel_enabled())
    par::softmax_rows_backward(y, gy, gx, rows, cols);
  else
    serial::softmax_rows_backward(y, gy, gx, rows, cols);
}

template <typename T>
void bilinear_resize(const T* x, T* y, int c, int in_h, int in_w, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("bilinear_resize: empty target");
  if (parallel_enabled())
    par::bilinear_resize(x, y, c, in_h, in_w, out_h, out_w);
  else
    serial::bilinear_resize(x, y, c, in_h, in_w, out_h, out_w);
}

template <typename T>
void bilinear_resize_backward(const T* gy, T* gx, int c, int in_h, int in_w, int out_h,
                              int out_w) {
  if (parallel_enabled())
    par::bilinear_resize_backward(gy, gx, c, in_h, in_w, out_h, out_w);
  else
    serial::bilinear_resize_backward(gy, gx, c, in_h, in_w, out_h, out_w);
}

template <typename T>
void relu_forward(const T* x, T* y, std::size_t n) {
  if (parallel_enabled())
    par::relu_forward(x, y, n);
  else
    serial::relu_forward(x, y, n);
}

template <typename T>
void relu_backward(const T* y, const T* gy, T* gx, std::size_t n) {
  if (parallel_enabled())
    par::relu_backward(y, gy, gx, n);
  else
    serial::relu_backward(y, gy, gx, n);
}

template <typename T>
void bn_relu_forward_train(const T* x, const T* gamma, const T* beta, T eps, T* mean, T* var,
                           T* y, int c, int hw) {
  if (parallel_enabled())
    par::bn_relu_forward_train(x, gamma, beta, eps, mean, var, y, c, hw);
  else
    serial::bn_relu_forward_train(x, gamma, beta, eps, mean, var, y, c, hw);
}

template <typename T>
void bn_relu_forward_eval(const T* x, const T* gamma, const T* beta, const T* rmean,
                          const T* rvar, T eps, T* y, int c, int hw) {
  if (parallel_enabled())
    par::bn_relu_forward_eval(x, gamma, beta, rmean, rvar, eps, y, c, hw);
  else
    serial::bn_relu_forward_eval(x, gamma, beta, rmean, rvar, eps, y, c, hw);
}

template <typename T>
void bn_relu_backward_train(const T* x, const T* gamma, const T* beta, const T* mean,
                            const T* var, T eps, const T* gy, T* gx, T* ggamma, T* gbeta,
                            int c, int hw) {
  if (parallel_enabled())
    par::bn_relu_backward_train(x, gamma, beta, mean, var, eps, gy, gx, ggamma, gbeta, c, hw);
  else
    serial::bn_relu_backward_train(x, gamma, beta, mean, var, eps, gy, gx, ggamma, gbeta, c, hw);
}

template <typename T>
void maxpool2_forward(const T* x, T* y, int* argmax, int c, int h, int w) {
  if (h % 2 != 0 || w % 2 != 0) throw std::invalid_argument("maxpool2: odd spatial extent");
  if (parallel_enabled())
    par::maxpool2_forward(x, y, argmax, c, h, w);
  else
    serial::maxpool2_forward(x, y, argmax, c, h, w);
}

template <typename T>
void maxpool2_backward(const T* gy, const int* argmax, T* gx, int c, int h, int w) {
  if (parallel_enabled())
    par::maxpool2_backward(gy, argmax, gx, c, h, w);
  else
    serial::maxpool2_backward(gy, argmax, gx, c, h, w);
}

template <typename T>
void global_avg_pool(const T* x, T* y, int c, int hw) {
  if (parallel_enabled())
    par::global_avg_pool(x, y, c, hw);
  else
    serial::global_avg_pool(x, y, c, hw);
}

template <typename T>
void global_avg_pool_backward(const T* gy, T* gx, int c, int hw) {
  if (parallel_enabled())
    par::global_avg_pool_backward(gy, gx, c, hw);
  else
    serial::global_avg_pool_backward(gy, gx, c, hw);
}

#define AENET_INSTANTIATE_DISPATCH(T)                                                          \
  template void conv2d_forward<T>(const T*, const T*, const T*, T*, const Conv2dDims&);        \
  template void conv2d_backward_input<T>(const T*, const T*, T*, const Conv2dDims&);           \
  template void conv2d_backward_params<T>(const T*, const T*, T*, T*, const Conv2dDims&);      \
  template void matmul<T>(const T*, const T*, T*, int, int, int);                              \
  template void softmax_rows<T>(const T*, T*, int, int);                                       \
  template void softmax_rows_backward<T>(const T*, const T*, T*, int, int);                    \
  template void bilinear_resize<T>(const T*, T*, int, int, int, int, int);                     \
  template void bilinear_resize_backward<T>(const T*, T*, int, int, int, int, int);            \
  template void relu_forward<T>(const T*, T*, std::size_t);                                    \
  template void relu_backward<T>(const T*, const T*, T*, std::size_t);                         \
  template void bn_relu_forward_train<T>(const T*, const T*, const T*, T, T*, T*, T*, int,     \
                                         int);                                                 \
  template void bn_relu_forward_eval<T>(const T*, const T*, const T*, const T*, const T*, T,   \
                                        T*, int, int);                                         \
  template void bn_relu_backward_train<T>(const T*, const T*, const T*, const T*, const T*, T, \
                                          const T*, T*, T*, T*, int, int);                     \
  template void maxpool2_forward<T>(const T*, T*, int*, int, int, int);                        \
  template void maxpool2_backward<T>(const T*, const int*, T*, int, int, int);                 \
  template void global_avg_pool<T>(const T*, T*, int, int);                                    \
  template void global_avg_pool_backward<T>(const T*, T*, int, int);

AENET_INSTANTIATE_DISPATCH(float)
AENET_INSTANTIATE_DISPATCH(double)

}  // namespace aenet::kernels
