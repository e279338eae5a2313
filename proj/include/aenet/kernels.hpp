#pragma once

#include <cstddef>
#include <cstdint>

namespace aenet::kernels {

/// Global backend switch. The parallel (OpenMP) kernels and the serial
/// reference kernels produce bit-identical results: every output element is
/// accumulated in the same order by exactly one thread.
bool parallel_enabled();
void set_parallel(bool on);

struct Conv2dDims {
  int in_c = 0, in_h = 0, in_w = 0;
  int out_c = 0, k_h = 1, k_w = 1;
  int stride = 1, pad = 0;

  int out_h() const { return (in_h + 2 * pad - k_h) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - k_w) / stride + 1; }
};

// Layouts: feature maps C×H×W row-major, kernels OC×IC×KH×KW, matrices R×C.

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y, const Conv2dDims& d);

template <typename T>
void conv2d_backward_input(const T* gy, const T* w, T* gx, const Conv2dDims& d);

/// Accumulates into gw / gb (gb may be null).
template <typename T>
void conv2d_backward_params(const T* gy, const T* x, T* gw, T* gb, const Conv2dDims& d);

template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n);

template <typename T>
void softmax_rows(const T* x, T* y, int rows, int cols);

template <typename T>
void softmax_rows_backward(const T* y, const T* gy, T* gx, int rows, int cols);

template <typename T>
void bilinear_resize(const T* x, T* y, int c, int in_h, int in_w, int out_h, int out_w);

/// gx is zero-initialised then scattered into with the forward weights.
template <typename T>
void bilinear_resize_backward(const T* gy, T* gx, int c, int in_h, int in_w, int out_h, int out_w);

template <typename T>
void relu_forward(const T* x, T* y, std::size_t n);

template <typename T>
void relu_backward(const T* y, const T* gy, T* gx, std::size_t n);

/// Batch statistics mode: per-channel mean / population variance over the
/// spatial extent, then scale/shift and ReLU. mean/var are outputs (length c).
template <typename T>
void bn_relu_forward_train(const T* x, const T* gamma, const T* beta, T eps, T* mean, T* var,
                           T* y, int c, int hw);

template <typename T>
void bn_relu_forward_eval(const T* x, const T* gamma, const T* beta, const T* rmean,
                          const T* rvar, T eps, T* y, int c, int hw);

/// Accumulates into ggamma/gbeta; writes gx.
template <typename T>
void bn_relu_backward_train(const T* x, const T* gamma, const T* beta, const T* mean,
                            const T* var, T eps, const T* gy, T* gx, T* ggamma, T* gbeta,
                            int c, int hw);

/// 2×2 max pool, stride 2. h and w must be even. argmax stores the flat
/// spatial index of the winner within the channel plane.
template <typename T>
void maxpool2_forward(const T* x, T* y, int* argmax, int c, int h, int w);

template <typename T>
void maxpool2_backward(const T* gy, const int* argmax, T* gx, int c, int h, int w);

template <typename T>
void global_avg_pool(const T* x, T* y, int c, int hw);

template <typename T>
void global_avg_pool_backward(const T* gy, T* gx, int c, int hw);

// Serial reference implementations (plain nested loops, kept for testing the
// OpenMP kernels against) and the OpenMP implementations share signatures.
namespace serial {
template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y, const Conv2dDims& d);
template <typename T>
void conv2d_backward_input(const T* gy, const T* w, T* gx, const Conv2dDims& d);
template <typename T>
void conv2d_backward_params(const T* gy, const T* x, T* gw, T* gb, const Conv2dDims& d);
template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n);
template <typename T>
void softmax_rows(const T* x, T* y, int rows, int cols);
template <typename T>
void softmax_rows_backward(const T* y, const T* gy, T* gx, int rows, int cols);
template <typename T>
void bilinear_resize(const T* x, T* y, int c, int in_h, int in_w, int out_h, int out_w);
template <typename T>
void bilinear_resize_backward(const T* gy, T* gx, int c, int in_h, int in_w, int out_h, int out_w);
template <typename T>
void relu_forward(const T* x, T* y, std::size_t n);
template <typename T>
void relu_backward(const T* y, const T* gy, T* gx, std::size_t n);
template <typename T>
void bn_relu_forward_train(const T* x, const T* gamma, const T* beta, T eps, T* mean, T* var,
                           T* y, int c, int hw);
template <typename T>
void bn_relu_forward_eval(const T* x, const T* gamma, const T* beta, const T* rmean,
                          const T* rvar, T eps, T* y, int c, int hw);
template <typename T>
void bn_relu_backward_train(const T* x, const T* gamma, const T* beta, const T* mean,
                            const T* var, T eps, const T* gy, T* gx, T* ggamma, T* gbeta,
                            int c, int hw);
template <typename T>
void maxpool2_forward(const T* x, T* y, int* argmax, int c, int h, int w);
template <typename T>
void maxpool2_backward(const T* gy, const int* argmax, T* gx, int c, int h, int w);
template <typename T>
void global_avg_pool(const T* x, T* y, int c, int hw);
template <typename T>
void global_avg_pool_backward(const T* gy, T* gx, int c, int hw);
}  // namespace serial

namespace par {
template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y, const Conv2dDims& d);
template <typename T>
void conv2d_backward_input(const T* gy, const T* w, T* gx, const Conv2dDims& d);
template <typename T>
void conv2d_backward_params(const T* gy, const T* x, T* gw, T* gb, const Conv2dDims& d);
template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n);
template <typename T>
void softmax_rows(const T* x, T* y, int rows, int cols);
template <typename T>
void softmax_rows_backward(const T* y, const T* gy, T* gx, int rows, int cols);
template <typename T>
void bilinear_resize(const T* x, T* y, int c, int in_h, int in_w, int out_h, int out_w);
template <typename T>
void bilinear_resize_backward(const T* gy, T* gx, int c, int in_h, int in_w, int out_h, int out_w);
template <typename T>
void relu_forward(const T* x, T* y, std::size_t n);
template <typename T>
void relu_backward(const T* y, const T* gy, T* gx, std::size_t n);
template <typename T>
void bn_relu_forward_train(const T* x, const T* gamma, const T* beta, T eps, T* mean, T* var,
                           T* y, int c, int hw);
template <typename T>
void bn_relu_forward_eval(const T* x, const T* gamma, const T* beta, const T* rmean,
                          const T* rvar, T eps, T* y, int c, int hw);
template <typename T>
void bn_relu_backward_train(const T* x, const T* gamma, const T* beta, const T* mean,
                            const T* var, T eps, const T* gy, T* gx, T* ggamma, T* gbeta,
                            int c, int hw);
template <typename T>
void maxpool2_forward(const T* x, T* y, int* argmax, int c, int h, int w);
template <typename T>
void maxpool2_backward(const T* gy, const int* argmax, T* gx, int c, int h, int w);
template <typename T>
void global_avg_pool(const T* x, T* y, int c, int hw);
template <typename T>
void global_avg_pool_backward(const T* gy, T* gx, int c, int hw);
}  // namespace par

}  // namespace aenet::kernels
