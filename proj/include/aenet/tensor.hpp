#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace aenet {

/// Dense row-major tensor. Shape metadata plus a contiguous value buffer;
/// product(shape) == values.size() always holds.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> values;

  Tensor() = default;

  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    values.assign(numel_of(shape), T(0));
  }

  Tensor(std::vector<int> s, std::vector<T> v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != numel_of(shape))
      throw std::invalid_argument("tensor: shape/value size mismatch");
  }

  static std::size_t numel_of(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d <= 0) throw std::invalid_argument("tensor: non-positive extent");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  static Tensor full(std::vector<int> s, T v) {
    Tensor t(std::move(s));
    std::fill(t.values.begin(), t.values.end(), v);
    return t;
  }

  std::size_t numel() const { return values.size(); }
  int ndim() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }

  T* data() { return values.data(); }
  const T* data() const { return values.data(); }

  T& operator[](std::size_t i) { return values[i]; }
  const T& operator[](std::size_t i) const { return values[i]; }

  // rank-3 (C,H,W) accessor
  T& at(int c, int y, int x) {
    return values[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
  }
  const T& at(int c, int y, int x) const {
    return values[(static_cast<std::size_t>(c) * shape[1] + y) * shape[2] + x];
  }

  // rank-2 (R,C) accessor
  T& at(int r, int c) { return values[static_cast<std::size_t>(r) * shape[1] + c]; }
  const T& at(int r, int c) const { return values[static_cast<std::size_t>(r) * shape[1] + c]; }

  /// Same data, new shape. Element order is the row-major flattening, so a
  /// C×H×W map reshaped to C×N lays each channel out as N = H*W pixels.
  Tensor reshaped(std::vector<int> s) const {
    if (numel_of(s) != values.size())
      throw std::invalid_argument("tensor: reshape changes element count");
    return Tensor(std::move(s), values);
  }

  bool all_finite() const {
    for (const T& v : values)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }
};

template <typename T>
void ensure_finite(const Tensor<T>& t, const char* what) {
  if (!t.all_finite()) throw std::runtime_error(std::string("non-finite values in ") + what);
}

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  Tensor<To> out(t.shape);
  for (std::size_t i = 0; i < t.numel(); ++i) out.values[i] = static_cast<To>(t.values[i]);
  return out;
}

/// Fill with N(0, stddev) draws from a dedicated generator.
template <typename T>
void fill_normal(Tensor<T>& t, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (T& v : t.values) v = static_cast<T>(dist(rng));
}

template <typename T>
void fill_uniform(Tensor<T>& t, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (T& v : t.values) v = static_cast<T>(dist(rng));
}

/// Stable 64-bit name hash, used to give every parameter tensor its own
/// init stream independent of module toggles.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t seed, const std::string& name) {
  std::uint64_t z = seed ^ fnv1a64(name);
  // splitmix64 finalizer
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace aenet
