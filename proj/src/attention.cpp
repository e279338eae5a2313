#include "aenet/attention.hpp"

#include <stdexcept>

#include "aenet/kernels.hpp"

namespace aenet {

template <typename T>
Tensor<T> transposed(const Tensor<T>& m) {
  if (m.ndim() != 2) throw std::invalid_argument("transposed: rank-2 expected");
  const int r = m.dim(0), c = m.dim(1);
  Tensor<T> out({c, r});
#pragma omp parallel for schedule(static)
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      out.values[static_cast<std::size_t>(j) * r + i] =
          m.values[static_cast<std::size_t>(i) * c + j];
  return out;
}

template <typename T>
SpatialAttention<T>::SpatialAttention(std::string name_, int channels_, int qk_channels_,
                                      int v_channels_)
    : name(std::move(name_)), channels(channels_) {
  qk_channels = qk_channels_ > 0 ? qk_channels_ : std::max(1, channels / 8);
  v_channels = v_channels_ > 0 ? v_channels_ : channels;
  q_proj = Conv2d<T>(name + ".q", channels, qk_channels, 1);
  k_proj = Conv2d<T>(name + ".k", channels, qk_channels, 1);
  v_proj = Conv2d<T>(name + ".v", channels, v_channels, 1);
  out_proj = Conv2d<T>(name + ".out", v_channels, channels, 1);
}

template <typename T>
void SpatialAttention<T>::init(std::uint64_t seed) {
  q_proj.init_he(seed);
  k_proj.init_he(seed);
  v_proj.init_he(seed);
  if (v_channels == channels)
    out_proj.init_identity();
  else
    out_proj.init_he(seed);
}

template <typename T>
Tensor<T> SpatialAttention<T>::affinity(const Tensor<T>& a) {
  if (a.ndim() != 3 || a.dim(0) != channels)
    throw std::invalid_argument("spatial_attention: channel mismatch");
  cache_h = a.dim(1);
  cache_w = a.dim(2);
  const int n = cache_h * cache_w;
  q_mat = q_proj.forward(a).reshaped({qk_channels, n});
  k_mat = k_proj.forward(a).reshaped({qk_channels, n});
  // logits[j][i] = k_j · q_i, softmax over i per row
  Tensor<T> kt = transposed(k_mat);
  Tensor<T> logits({n, n});
  kernels::matmul(kt.data(), q_mat.data(), logits.data(), n, qk_channels, n);
  affinity_cache = Tensor<T>({n, n});
  kernels::softmax_rows(logits.data(), affinity_cache.data(), n, n);
  return affinity_cache;
}

template <typename T>
Tensor<T> SpatialAttention<T>::forward(const Tensor<T>& a) {
  affinity(a);
  const int n = cache_h * cache_w;
  v_mat = v_proj.forward(a).reshaped({v_channels, n});
  // mixed[c][j] = sum_i v[c][i] * S[j][i]
  Tensor<T> st = transposed(affinity_cache);
  Tensor<T> mixed({v_channels, n});
  kernels::matmul(v_mat.data(), st.data(), mixed.data(), v_channels, n, n);
  Tensor<T> projected = out_proj.forward(mixed.reshaped({v_channels, cache_h, cache_w}));
  Tensor<T> out = projected;
  for (std::size_t i = 0; i < out.numel(); ++i) out.values[i] += a.values[i];
  return out;
}

template <typename T>
Tensor<T> SpatialAttention<T>::backward(const Tensor<T>& gf) {
  const int n = cache_h * cache_w;
  Tensor<T> g_mixed = out_proj.backward(gf).reshaped({v_channels, n});
  // mixed = V · Sᵀ
  Tensor<T> gv({v_channels, n});
  kernels::matmul(g_mixed.data(), affinity_cache.data(), gv.data(), v_channels, n, n);
  Tensor<T> vt = transposed(v_mat);
  Tensor<T> g_st({n, n});
  kernels::matmul(vt.data(), g_mixed.data(), g_st.data(), n, v_channels, n);
  Tensor<T> g_s = transposed(g_st);
  Tensor<T> g_logits({n, n});
  kernels::softmax_rows_backward(affinity_cache.data(), g_s.data(), g_logits.data(), n, n);
  // logits = Kᵀ · Q
  Tensor<T> g_kt({n, qk_channels});
  Tensor<T> qt = transposed(q_mat);
  kernels::matmul(g_logits.data(), qt.data(), g_kt.data(), n, n, qk_channels);
  Tensor<T> g_k = transposed(g_kt);
  Tensor<T> g_q({qk_channels, n});
  kernels::matmul(k_mat.data(), g_logits.data(), g_q.data(), qk_channels, n, n);

  Tensor<T> ga = v_proj.backward(gv.reshaped({v_channels, cache_h, cache_w}));
  Tensor<T> ga_k = k_proj.backward(g_k.reshaped({qk_channels, cache_h, cache_w}));
  Tensor<T> ga_q = q_proj.backward(g_q.reshaped({qk_channels, cache_h, cache_w}));
  for (std::size_t i = 0; i < ga.numel(); ++i)
    ga.values[i] += ga_k.values[i] + ga_q.values[i] + gf.values[i];
  return ga;
}

template <typename T>
void SpatialAttention<T>::params(std::vector<ParamRef<T>>& out) {
  q_proj.params(out);
  k_proj.params(out);
  v_proj.params(out);
  out_proj.params(out);
}

template <typename T>
void SpatialAttention<T>::zero_grad() {
  q_proj.zero_grad();
  k_proj.zero_grad();
  v_proj.zero_grad();
  out_proj.zero_grad();
}

template <typename T>
Tensor<T> ChannelAttention<T>::affinity(const Tensor<T>& a) {
  if (a.ndim() != 3) throw std::invalid_argument("channel_attention: rank-3 expected");
  const int c = a.dim(0);
  cache_h = a.dim(1);
  cache_w = a.dim(2);
  const int n = cache_h * cache_w;
  a_mat = a.reshaped({c, n});
  Tensor<T> at = transposed(a_mat);
  Tensor<T> logits({c, c});
  kernels::matmul(a_mat.data(), at.data(), logits.data(), c, n, c);
  affinity_cache = Tensor<T>({c, c});
  kernels::softmax_rows(logits.data(), affinity_cache.data(), c, c);
  return affinity_cache;
}

template <typename T>
Tensor<T> ChannelAttention<T>::forward(const Tensor<T>& a) {
  affinity(a);
  const int c = a.dim(0);
  const int n = cache_h * cache_w;
  Tensor<T> mixed({c, n});
  kernels::matmul(affinity_cache.data(), a_mat.data(), mixed.data(), c, c, n);
  Tensor<T> out = mixed.reshaped({c, cache_h, cache_w});
  for (std::size_t i = 0; i < out.numel(); ++i) out.values[i] += a.values[i];
  return out;
}

template <typename T>
Tensor<T> ChannelAttention<T>::backward(const Tensor<T>& gf) {
  const int c = a_mat.dim(0);
  const int n = cache_h * cache_w;
  Tensor<T> g_mixed = gf.reshaped({c, n});
  // mixed = S · V with V = A
  Tensor<T> at = transposed(a_mat);
  Tensor<T> g_s({c, c});
  kernels::matmul(g_mixed.data(), at.data(), g_s.data(), c, n, c);
  Tensor<T> st = transposed(affinity_cache);
  Tensor<T> g_v({c, n});
  kernels::matmul(st.data(), g_mixed.data(), g_v.data(), c, c, n);
  Tensor<T> g_logits({c, c});
  kernels::softmax_rows_backward(affinity_cache.data(), g_s.data(), g_logits.data(), c, c);
  // logits = A · Aᵀ, so both factors contribute
  Tensor<T> g_a({c, n});
  kernels::matmul(g_logits.data(), a_mat.data(), g_a.data(), c, c, n);
  Tensor<T> g_lt = transposed(g_logits);
  Tensor<T> g_a2({c, n});
  kernels::matmul(g_lt.data(), a_mat.data(), g_a2.data(), c, c, n);
  Tensor<T> ga({c, cache_h, cache_w});
  for (std::size_t i = 0; i < ga.numel(); ++i)
    ga.values[i] = g_a.values[i] + g_a2.values[i] + g_v.values[i] + gf.values[i];
  return ga;
}

#define AENET_INSTANTIATE_ATTENTION(T)      \
  template Tensor<T> transposed<T>(const Tensor<T>&); \
  template struct SpatialAttention<T>;      \
  template struct ChannelAttention<T>;

AENET_INSTANTIATE_ATTENTION(float)
AENET_INSTANTIATE_ATTENTION(double)

}  // namespace aenet
