// Times the OpenMP kernels against the serial reference implementations.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include <omp.h>

#include "aenet/kernels.hpp"
#include "aenet/watershed.hpp"

using namespace aenet;
using Clock = std::chrono::steady_clock;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-28s serial %9.3f ms   openmp %9.3f ms   speedup %5.2fx\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  const auto fill = [&](std::vector<float>& v) {
    for (float& x : v) x = dist(rng);
  };

  {
    kernels::Conv2dDims d{32, 128, 128, 32, 3, 3, 1, 1};
    std::vector<float> x(static_cast<std::size_t>(d.in_c) * d.in_h * d.in_w);
    std::vector<float> w(static_cast<std::size_t>(d.out_c) * d.in_c * d.k_h * d.k_w);
    std::vector<float> b(d.out_c), y(static_cast<std::size_t>(d.out_c) * d.out_h() * d.out_w());
    fill(x);
    fill(w);
    fill(b);
    report("conv2d 32x128x128 3x3",
           time_of([&] { kernels::serial::conv2d_forward(x.data(), w.data(), b.data(),
                                                         y.data(), d); }, 3),
           time_of([&] { kernels::par::conv2d_forward(x.data(), w.data(), b.data(), y.data(),
                                                      d); }, 3));
  }
  {
    const int n = 512;
    std::vector<float> a(static_cast<std::size_t>(n) * n), b(a.size()), c(a.size());
    fill(a);
    fill(b);
    report("matmul 512x512",
           time_of([&] { kernels::serial::matmul(a.data(), b.data(), c.data(), n, n, n); }, 3),
           time_of([&] { kernels::par::matmul(a.data(), b.data(), c.data(), n, n, n); }, 3));
  }
  {
    const int rows = 4096, cols = 256;
    std::vector<float> x(static_cast<std::size_t>(rows) * cols), y(x.size());
    fill(x);
    report("softmax_rows 4096x256",
           time_of([&] { kernels::serial::softmax_rows(x.data(), y.data(), rows, cols); }, 5),
           time_of([&] { kernels::par::softmax_rows(x.data(), y.data(), rows, cols); }, 5));
  }
  {
    const int c = 8, in = 64, out = 512;
    std::vector<float> x(static_cast<std::size_t>(c) * in * in);
    std::vector<float> y(static_cast<std::size_t>(c) * out * out);
    fill(x);
    report("bilinear 8ch 64->512",
           time_of([&] { kernels::serial::bilinear_resize(x.data(), y.data(), c, in, in, out,
                                                          out); }, 5),
           time_of([&] { kernels::par::bilinear_resize(x.data(), y.data(), c, in, in, out,
                                                       out); }, 5));
  }
  {
    Mask mask(512, 512);
    std::mt19937_64 mrng(11);
    std::uniform_int_distribution<int> coin(0, 99);
    for (auto& v : mask.labels) v = coin(mrng) < 30 ? 0 : 1;
    const bool was_parallel = kernels::parallel_enabled();
    kernels::set_parallel(false);
    const double serial_ms = time_of([&] { distance_transform(mask); }, 5);
    kernels::set_parallel(true);
    const double par_ms = time_of([&] { distance_transform(mask); }, 5);
    kernels::set_parallel(was_parallel);
    report("distance_transform 512^2", serial_ms, par_ms);
  }
  return 0;
}
