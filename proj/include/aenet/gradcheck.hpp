#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aenet/tensor.hpp"

namespace aenet {

/// Named view of a parameter tensor and its gradient buffer.
template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  Tensor<T>* grad = nullptr;
};

struct GradCheckWorst {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckReport {
  bool pass = true;
  double max_rel_err = 0.0;
  std::size_t checked = 0;
  GradCheckWorst worst;

  std::string describe() const;
};

/// Central finite-difference check of analytic gradients, 64-bit mode.
///
/// `loss` re-evaluates the scalar objective at the current parameter values;
/// `params[i].grad` must already hold the analytic gradient for the unperturbed
/// point. Coordinates are compared as
///   |analytic - fd| / max(|analytic|, |fd|, 1e-8) <= tol
/// with fd = (loss(x+h) - loss(x-h)) / 2h. When a tensor has more than
/// `max_coords_per_tensor` entries a seeded subsample is probed instead.
GradCheckReport check_gradients(const std::function<double()>& loss,
                                const std::vector<ParamRef<double>>& params, double tol,
                                double step = 1e-5,
                                std::size_t max_coords_per_tensor = SIZE_MAX,
                                std::uint64_t subsample_seed = 12345);

}  // namespace aenet
