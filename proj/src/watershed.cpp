#include "aenet/watershed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "aenet/kernels.hpp"

namespace aenet {

namespace {

constexpr double kUnreached = 1e12;  // stands in for +inf squared distance

// 1-D squared-distance transform, lower envelope of parabolas rooted at the
// sample points (Felzenszwalb & Huttenlocher).
void edt_1d(const std::vector<double>& f, std::vector<double>& d, int n,
            std::vector<int>& v, std::vector<double>& z) {
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s;
    for (;;) {
      const int p = v[k];
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
          (2.0 * q - 2.0 * p);
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

// full 2-D squared transform; seeds are pixels with seed(y,x) == true
std::vector<double> edt_squared(int h, int w, const std::vector<std::uint8_t>& seed) {
  std::vector<double> grid(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = seed[i] ? 0.0 : kUnreached;

  if (!kernels::parallel_enabled()) {
    std::vector<double> f(std::max(h, w)), d(std::max(h, w));
    std::vector<int> v(std::max(h, w));
    std::vector<double> z(std::max(h, w) + 1);
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) f[y] = grid[static_cast<std::size_t>(y) * w + x];
      edt_1d(f, d, h, v, z);
      for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = d[y];
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) f[x] = grid[static_cast<std::size_t>(y) * w + x];
      edt_1d(f, d, w, v, z);
      for (int x = 0; x < w; ++x) grid[static_cast<std::size_t>(y) * w + x] = d[x];
    }
    return grid;
  }

#pragma omp parallel
  {
    std::vector<double> f(std::max(h, w)), d(std::max(h, w));
    std::vector<int> v(std::max(h, w));
    std::vector<double> z(std::max(h, w) + 1);
#pragma omp for schedule(static)
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) f[y] = grid[static_cast<std::size_t>(y) * w + x];
      edt_1d(f, d, h, v, z);
      for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = d[y];
    }
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) f[x] = grid[static_cast<std::size_t>(y) * w + x];
      edt_1d(f, d, w, v, z);
      for (int x = 0; x < w; ++x) grid[static_cast<std::size_t>(y) * w + x] = d[x];
    }
  }
  return grid;
}

}  // namespace

DistanceMap distance_transform(const Mask& mask) {
  DistanceMap out(mask.h, mask.w);
  bool any_background = false;
  std::vector<std::uint8_t> seed(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    seed[i] = mask.labels[i] == 1;
    any_background |= seed[i] != 0;
  }
  if (!any_background) {
    // virtual background border just outside the image keeps distances finite
    for (int y = 0; y < mask.h; ++y)
      for (int x = 0; x < mask.w; ++x)
        out.at(y, x) = std::min(std::min(x + 1, y + 1), std::min(mask.w - x, mask.h - y));
    return out;
  }
  const std::vector<double> sq = edt_squared(mask.h, mask.w, seed);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    // squared distances are exact integers; round away envelope arithmetic
    out.values[i] = std::sqrt(static_cast<double>(std::llround(sq[i])));
  }
  return out;
}

namespace {

// 8-connected component labelling in scan order, labels from `first`
int label_components(const std::vector<std::uint8_t>& in, std::vector<std::int32_t>& labels,
                     int h, int w, int first) {
  int next = first;
  std::vector<int> stack;
  for (int start = 0; start < h * w; ++start) {
    if (!in[start] || labels[start] != 0) continue;
    labels[start] = next;
    stack.assign(1, start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int y = p / w, x = p % w;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dy == 0 && dx == 0) continue;
          const int ny = y + dy, nx = x + dx;
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          const int q = ny * w + nx;
          if (in[q] && labels[q] == 0) {
            labels[q] = next;
            stack.push_back(q);
          }
        }
    }
    ++next;
  }
  return next - first;
}

}  // namespace

MarkerMap extract_markers(const DistanceMap& dist, const MarkerConfig& cfg) {
  if (cfg.threshold_frac <= 0.0 || cfg.threshold_frac >= 1.0)
    throw std::invalid_argument("extract_markers: threshold fraction must lie in (0,1)");
  MarkerMap markers(dist.h, dist.w);
  const double maxd = *std::max_element(dist.values.begin(), dist.values.end());
  if (maxd == 0.0) {
    std::fill(markers.labels.begin(), markers.labels.end(), 1);
    markers.foreground_markers = 0;
    return markers;
  }
  const double threshold = cfg.threshold_frac * maxd;
  std::vector<std::uint8_t> sure_fg(dist.values.size());
  std::vector<std::uint8_t> fg(dist.values.size());
  for (std::size_t i = 0; i < dist.values.size(); ++i) {
    fg[i] = dist.values[i] > 0.0;
    sure_fg[i] = dist.values[i] >= threshold;
  }
  markers.foreground_markers =
      label_components(sure_fg, markers.labels, dist.h, dist.w, 2);

  // background farther than the margin from any cell pixel is sure background
  const std::vector<double> to_fg_sq = edt_squared(dist.h, dist.w, fg);
  const double margin_sq = cfg.background_margin * cfg.background_margin;
  for (std::size_t i = 0; i < markers.labels.size(); ++i) {
    if (markers.labels[i] != 0 || fg[i]) continue;
    if (to_fg_sq[i] > margin_sq) markers.labels[i] = 1;
  }
  return markers;
}

LabeledMask watershed_flood(const DistanceMap& topography, const MarkerMap& markers) {
  if (topography.h != markers.h || topography.w != markers.w)
    throw std::invalid_argument("watershed_flood: shape mismatch");
  const int h = markers.h, w = markers.w;
  const int n = h * w;

  struct Entry {
    double dist;
    std::uint64_t seq;
    int pixel;
    std::int32_t label;
  };
  struct Lower {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.dist != b.dist) return a.dist < b.dist;  // higher distance floods first
      return a.seq > b.seq;                          // FIFO among equal priorities
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, Lower> queue;
  std::uint64_t seq = 0;

  std::vector<std::int32_t> out(markers.labels);
  constexpr std::int32_t kBoundary = -1;
  const auto eligible = [&](std::int32_t label, int pixel) {
    // instances grow through foreground, background through background
    return label >= 2 ? topography.values[pixel] > 0.0 : topography.values[pixel] == 0.0;
  };
  const int dyx[4][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
  const auto push_neighbors = [&](int pixel, std::int32_t label) {
    const int y = pixel / w, x = pixel % w;
    for (const auto& d : dyx) {
      const int ny = y + d[0], nx = x + d[1];
      if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
      const int q = ny * w + nx;
      if (out[q] == 0 && eligible(label, q))
        queue.push({topography.values[q], seq++, q, label});
    }
  };

  for (int p = 0; p < n; ++p)
    if (out[p] >= 1) push_neighbors(p, out[p]);

  while (!queue.empty()) {
    const Entry e = queue.top();
    queue.pop();
    if (out[e.pixel] != 0) continue;
    bool conflict = false;
    if (e.label >= 2) {
      const int y = e.pixel / w, x = e.pixel % w;
      for (const auto& d : dyx) {
        const int ny = y + d[0], nx = x + d[1];
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        const std::int32_t nb = out[ny * w + nx];
        if (nb >= 2 && nb != e.label) {
          conflict = true;
          break;
        }
      }
    }
    if (conflict) {
      out[e.pixel] = kBoundary;
      continue;
    }
    out[e.pixel] = e.label;
    push_neighbors(e.pixel, e.label);
  }

  LabeledMask result(h, w);
  for (int p = 0; p < n; ++p) result.labels[p] = out[p] >= 2 ? out[p] - 1 : 0;
  result.instances = markers.foreground_markers;
  return result;
}

Mask remove_small_components(const Mask& mask, int min_size) {
  if (min_size <= 1) return mask;
  std::vector<std::uint8_t> cell(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) cell[i] = mask.labels[i] == 0;
  std::vector<std::int32_t> labels(mask.size(), 0);
  const int count = label_components(cell, labels, mask.h, mask.w, 1);
  std::vector<int> sizes(static_cast<std::size_t>(count) + 1, 0);
  for (std::int32_t l : labels)
    if (l > 0) ++sizes[l];
  Mask out = mask;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (labels[i] > 0 && sizes[labels[i]] < min_size) out.labels[i] = 1;
  return out;
}

PostprocessResult postprocess(const Tensor<float>& prob, const PostprocessConfig& cfg) {
  const int h = prob.ndim() == 3 ? prob.dim(1) : prob.dim(0);
  const int w = prob.ndim() == 3 ? prob.dim(2) : prob.dim(1);
  Mask mask(h, w);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask.labels[i] = prob.values[i] >= cfg.binarize_threshold ? 0 : 1;
  mask = remove_small_components(mask, cfg.min_component_size);

  const DistanceMap dist = distance_transform(mask);
  const MarkerMap markers = extract_markers(dist, cfg.markers);
  LabeledMask flooded = watershed_flood(dist, markers);

  PostprocessResult result;
  result.refined = Mask(h, w);
  for (std::size_t i = 0; i < result.refined.size(); ++i)
    result.refined.labels[i] = flooded.labels[i] >= 1 ? 0 : 1;
  result.instances = std::move(flooded);
  return result;
}

}  // namespace aenet
