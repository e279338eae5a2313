#include "aenet/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace aenet::kernels::serial {

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* bias, T* y, const Conv2dDims& d) {
  const int oh = d.out_h(), ow = d.out_w();
  for (int oc = 0; oc < d.out_c; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        T acc = bias ? bias[oc] : T(0);
        for (int ic = 0; ic < d.in_c; ++ic) {
          for (int kh = 0; kh < d.k_h; ++kh) {
            const int iy = oy * d.stride - d.pad + kh;
            if (iy < 0 || iy >= d.in_h) continue;
            for (int kw = 0; kw < d.k_w; ++kw) {
              const int ix = ox * d.stride - d.pad + kw;
              if (ix < 0 || ix >= d.in_w) continue;
              acc += w[((static_cast<std::size_t>(oc) * d.in_c + ic) * d.k_h + kh) * d.k_w + kw] *
                     x[(static_cast<std::size_t>(ic) * d.in_h + iy) * d.in_w + ix];
            }
          }
        }
        y[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox] = acc;
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const T* gy, const T* w, T* gx, const Conv2dDims& d) {
  const int oh = d.out_h(), ow = d.out_w();
  for (int ic = 0; ic < d.in_c; ++ic) {
    for (int iy = 0; iy < d.in_h; ++iy) {
      for (int ix = 0; ix < d.in_w; ++ix) {
        T acc = T(0);
        for (int oc = 0; oc < d.out_c; ++oc) {
          for (int kh = 0; kh < d.k_h; ++kh) {
            const int ty = iy + d.pad - kh;
            if (ty < 0 || ty % d.stride != 0) continue;
            const int oy = ty / d.stride;
            if (oy >= oh) continue;
            for (int kw = 0; kw < d.k_w; ++kw) {
              const int tx = ix + d.pad - kw;
              if (tx < 0 || tx % d.stride != 0) continue;
              const int ox = tx / d.stride;
              if (ox >= ow) continue;
              acc += w[((static_cast<std::size_t>(oc) * d.in_c + ic) * d.k_h + kh) * d.k_w + kw] *
                     gy[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox];
            }
          }
        }
        gx[(static_cast<std::size_t>(ic) * d.in_h + iy) * d.in_w + ix] = acc;
      }
    }
  }
}

template <typename T>
void conv2d_backward_params(const T* gy, const T* x, T* gw, T* gb, const Conv2dDims& d) {
  const int oh = d.out_h(), ow = d.out_w();
  for (int oc = 0; oc < d.out_c; ++oc) {
    for (int ic = 0; ic < d.in_c; ++ic) {
      for (int kh = 0; kh < d.k_h; ++kh) {
        for (int kw = 0; kw < d.k_w; ++kw) {
          T acc = T(0);
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * d.stride - d.pad + kh;
            if (iy < 0 || iy >= d.in_h) continue;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * d.stride - d.pad + kw;
              if (ix < 0 || ix >= d.in_w) continue;
              acc += gy[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox] *
                     x[(static_cast<std::size_t>(ic) * d.in_h + iy) * d.in_w + ix];
            }
          }
          gw[((static_cast<std::size_t>(oc) * d.in_c + ic) * d.k_h + kh) * d.k_w + kw] += acc;
        }
      }
    }
    if (gb) {
      T acc = T(0);
      for (int i = 0; i < oh * ow; ++i) acc += gy[static_cast<std::size_t>(oc) * oh * ow + i];
      gb[oc] += acc;
    }
  }
}

template <typename T>
void matmul(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    std::fill(crow, crow + n, T(0));
    for (int p = 0; p < k; ++p) {
      const T aip = a[static_cast<std::size_t>(i) * k + p];
      const T* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

template <typename T>
void softmax_rows(const T* x, T* y, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const T* xr = x + static_cast<std::size_t>(r) * cols;
    T* yr = y + static_cast<std::size_t>(r) * cols;
    T mx = xr[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, xr[j]);
    T sum = T(0);
    for (int j = 0; j < cols; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    const T inv = T(1) / sum;
    for (int j = 0; j < cols; ++j) yr[j] *= inv;
  }
}

template <typename T>
void softmax_rows_backward(const T* y, const T* gy, T* gx, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const T* yr = y + static_cast<std::size_t>(r) * cols;
    const T* gr = gy + static_cast<std::size_t>(r) * cols;
    T* xr = gx + static_cast<std::size_t>(r) * cols;
    T dot = T(0);
    for (int j = 0; j < cols; ++j) dot += gr[j] * yr[j];
    for (int j = 0; j < cols; ++j) xr[j] = yr[j] * (gr[j] - dot);
  }
}

namespace {

// align-corners-false source coordinate and the two taps around it
template <typename T>
inline void bilinear_taps(int out_pos, int in_n, int out_n, int& lo, int& hi, T& w_hi) {
  const T src = (T(out_pos) + T(0.5)) * T(in_n) / T(out_n) - T(0.5);
  T f = std::floor(src);
  lo = static_cast<int>(f);
  w_hi = src - f;
  hi = lo + 1;
  if (lo < 0) lo = 0;
  if (hi > in_n - 1) hi = in_n - 1;
  if (lo > in_n - 1) lo = in_n - 1;
}

}  // namespace

template <typename T>
void bilinear_resize(const T* x, T* y, int c, int in_h, int in_w, int out_h, int out_w) {
  for (int ch = 0; ch < c; ++ch) {
    const T* xp = x + static_cast<std::size_t>(ch) * in_h * in_w;
    T* yp = y + static_cast<std::size_t>(ch) * out_h * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      int y0, y1;
      T wy;
      bilinear_taps(oy, in_h, out_h, y0, y1, wy);
      for (int ox = 0; ox < out_w; ++ox) {
        int x0, x1;
        T wx;
        bilinear_taps(ox, in_w, out_w, x0, x1, wx);
        const T top = xp[y0 * in_w + x0] * (T(1) - wx) + xp[y0 * in_w + x1] * wx;
        const T bot = xp[y1 * in_w + x0] * (T(1) - wx) + xp[y1 * in_w + x1] * wx;
        yp[oy * out_w + ox] = top * (T(1) - wy) + bot * wy;
      }
    }
  }
}

template <typename T>
void bilinear_resize_backward(const T* gy, T* gx, int c, int in_h, int in_w, int out_h,
                              int out_w) {
  std::fill(gx, gx + static_cast<std::size_t>(c) * in_h * in_w, T(0));
  for (int ch = 0; ch < c; ++ch) {
    const T* gp = gy + static_cast<std::size_t>(ch) * out_h * out_w;
    T* xp = gx + static_cast<std::size_t>(ch) * in_h * in_w;
    for (int oy = 0; oy < out_h; ++oy) {
      int y0, y1;
      T wy;
      bilinear_taps(oy, in_h, out_h, y0, y1, wy);
      for (int ox = 0; ox < out_w; ++ox) {
        int x0, x1;
        T wx;
        bilinear_taps(ox, in_w, out_w, x0, x1, wx);
        const T g = gp[oy * out_w + ox];
        xp[y0 * in_w + x0] += g * (T(1) - wy) * (T(1) - wx);
        xp[y0 * in_w + x1] += g * (T(1) - wy) * wx;
        xp[y1 * in_w + x0] += g * wy * (T(1) - wx);
        xp[y1 * in_w + x1] += g * wy * wx;
      }
    }
  }
}

template <typename T>
void relu_forward(const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(const T* y, const T* gy, T* gx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) gx[i] = y[i] > T(0) ? gy[i] : T(0);
}

template <typename T>
void bn_relu_forward_train(const T* x, const T* gamma, const T* beta, T eps, T* mean, T* var,
                           T* y, int c, int hw) {
  for (int ch = 0; ch < c; ++ch) {
    const T* xp = x + static_cast<std::size_t>(ch) * hw;
    T* yp = y + static_cast<std::size_t>(ch) * hw;
    T mu = T(0);
    for (int i = 0; i < hw; ++i) mu += xp[i];
    mu /= T(hw);
    T v = T(0);
    for (int i = 0; i < hw; ++i) {
      const T d = xp[i] - mu;
      v += d * d;
    }
    v /= T(hw);
    mean[ch] = mu;
    var[ch] = v;
    const T istd = T(1) / std::sqrt(v + eps);
    for (int i = 0; i < hw; ++i) {
      const T z = gamma[ch] * (xp[i] - mu) * istd + beta[ch];
      yp[i] = z > T(0) ? z : T(0);
    }
  }
}

template <typename T>
void bn_relu_forward_eval(const T* x, const T* gamma, const T* beta, const T* rmean,
                          const T* rvar, T eps, T* y, int c, int hw) {
  for (int ch = 0; ch < c; ++ch) {
    const T* xp = x + static_cast<std::size_t>(ch) * hw;
    T* yp = y + static_cast<std::size_t>(ch) * hw;
    const T istd = T(1) / std::sqrt(rvar[ch] + eps);
    for (int i = 0; i < hw; ++i) {
      const T z = gamma[ch] * (xp[i] - rmean[ch]) * istd + beta[ch];
      yp[i] = z > T(0) ? z : T(0);
    }
  }
}

template <typename T>
void bn_relu_backward_train(const T* x, const T* gamma, const T* beta, const T* mean,
                            const T* var, T eps, const T* gy, T* gx, T* ggamma, T* gbeta,
                            int c, int hw) {
  for (int ch = 0; ch < c; ++ch) {
    const T* xp = x + static_cast<std::size_t>(ch) * hw;
    const T* gp = gy + static_cast<std::size_t>(ch) * hw;
    T* xo = gx + static_cast<std::size_t>(ch) * hw;
    const T mu = mean[ch];
    const T istd = T(1) / std::sqrt(var[ch] + eps);
    // first pass: sums over the post-relu mask
    T sum_gz = T(0), sum_gz_xhat = T(0);
    for (int i = 0; i < hw; ++i) {
      const T xhat = (xp[i] - mu) * istd;
      const T z = gamma[ch] * xhat + beta[ch];
      const T gz = z > T(0) ? gp[i] : T(0);
      sum_gz += gz;
      sum_gz_xhat += gz * xhat;
    }
    ggamma[ch] += sum_gz_xhat;
    gbeta[ch] += sum_gz;
    const T n = T(hw);
    for (int i = 0; i < hw; ++i) {
      const T xhat = (xp[i] - mu) * istd;
      const T z = gamma[ch] * xhat + beta[ch];
      const T gz = z > T(0) ? gp[i] : T(0);
      // d/dx of batch-statistics normalisation
      xo[i] = gamma[ch] * istd * (gz - sum_gz / n - xhat * sum_gz_xhat / n);
    }
  }
}

template <typename T>
void maxpool2_forward(const T* x, T* y, int* argmax, int c, int h, int w) {
  const int oh = h / 2, ow = w / 2;
  for (int ch = 0; ch < c; ++ch) {
    const T* xp = x + static_cast<std::size_t>(ch) * h * w;
    T* yp = y + static_cast<std::size_t>(ch) * oh * ow;
    int* ap = argmax + static_cast<std::size_t>(ch) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        int best = (2 * oy) * w + 2 * ox;
        T bv = xp[best];
        const int cand[3] = {(2 * oy) * w + 2 * ox + 1, (2 * oy + 1) * w + 2 * ox,
                             (2 * oy + 1) * w + 2 * ox + 1};
        for (int idx : cand) {
          if (xp[idx] > bv) {
            bv = xp[idx];
            best = idx;
          }
        }
        yp[oy * ow + ox] = bv;
        ap[oy * ow + ox] = best;
      }
    }
  }
}

template <typename T>
void maxpool2_backward(const T* gy, const int* argmax, T* gx, int c, int h, int w) {
  const int oh = h / 2, ow = w / 2;
  std::fill(gx, gx + static_cast<std::size_t>(c) * h * w, T(0));
  for (int ch = 0; ch < c; ++ch) {
    const T* gp = gy + static_cast<std::size_t>(ch) * oh * ow;
    const int* ap = argmax + static_cast<std::size_t>(ch) * oh * ow;
    T* xo = gx + static_cast<std::size_t>(ch) * h * w;
    for (int i = 0; i < oh * ow; ++i) xo[ap[i]] += gp[i];
  }
}

template <typename T>
void global_avg_pool(const T* x, T* y, int c, int hw) {
  for (int ch = 0; ch < c; ++ch) {
    T acc = T(0);
    const T* xp = x + static_cast<std::size_t>(ch) * hw;
    for (int i = 0; i < hw; ++i) acc += xp[i];
    y[ch] = acc / T(hw);
  }
}

template <typename T>
void global_avg_pool_backward(const T* gy, T* gx, int c, int hw) {
  for (int ch = 0; ch < c; ++ch) {
    const T g = gy[ch] / T(hw);
    T* xo = gx + static_cast<std::size_t>(ch) * hw;
    for (int i = 0; i < hw; ++i) xo[i] = g;
  }
}

#define AENET_INSTANTIATE_SERIAL(T)                                                            \
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

AENET_INSTANTIATE_SERIAL(float)
AENET_INSTANTIATE_SERIAL(double)

}  // namespace aenet::kernels::serial
