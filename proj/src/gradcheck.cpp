#include "aenet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace aenet {

std::string GradCheckReport::describe() const {
  std::ostringstream os;
  os << (pass ? "pass" : "FAIL") << " (checked " << checked
     << " coords, max_rel_err=" << max_rel_err;
  if (!worst.param.empty())
    os << ", worst " << worst.param << "[" << worst.index << "] analytic=" << worst.analytic
       << " fd=" << worst.numeric;
  os << ")";
  return os.str();
}

GradCheckReport check_gradients(const std::function<double()>& loss,
                                const std::vector<ParamRef<double>>& params, double tol,
                                double step, std::size_t max_coords_per_tensor,
                                std::uint64_t subsample_seed) {
  GradCheckReport report;
  for (const auto& p : params) {
    ensure_finite(*p.value, p.name.c_str());
    const std::size_t n = p.value->numel();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (n > max_coords_per_tensor) {
      std::mt19937_64 rng(mix_seed(subsample_seed, p.name));
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords_per_tensor);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t idx : coords) {
      double& v = p.value->values[idx];
      const double saved = v;
      v = saved + step;
      const double up = loss();
      v = saved - step;
      const double down = loss();
      v = saved;
      const double fd = (up - down) / (2.0 * step);
      const double analytic = p.grad->values[idx];
      const double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-8});
      const double rel = std::fabs(analytic - fd) / denom;
      ++report.checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = {p.name, idx, analytic, fd, rel};
      }
    }
  }
  report.pass = report.max_rel_err <= tol;
  return report;
}

}  // namespace aenet
