#pragma once

#include <random>

#include "aenet/tensor.hpp"

namespace aenet::test {

template <typename T>
Tensor<T> random_tensor(std::vector<int> shape, std::mt19937_64& rng, double lo = -1.0,
                        double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (T& v : t.values) v = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
double dot(const Tensor<T>& a, const Tensor<T>& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    acc += static_cast<double>(a.values[i]) * static_cast<double>(b.values[i]);
  return acc;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::fabs(static_cast<double>(a.values[i]) - b.values[i]));
  return m;
}

}  // namespace aenet::test
