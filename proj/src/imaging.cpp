#include "aenet/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include <json.hpp>

#include "aenet/kernels.hpp"
#include "aenet/xml.hpp"

namespace aenet {

namespace {

void collect_regions(const xml::Node& node, AnnotationSet& out) {
  if (node.name == "Region") {
    Polygon poly;
    // vertices may sit under a <Vertices> wrapper or directly under Region
    const xml::Node* vertices = node.child("Vertices");
    const auto& pool = vertices ? vertices->children : node.children;
    for (const auto& v : pool) {
      if (v.name != "Vertex") continue;
      const std::string* x = v.attribute("X");
      const std::string* y = v.attribute("Y");
      if (!x || !y) continue;
      poly.vertices.push_back({std::stod(*x), std::stod(*y)});
    }
    if (poly.vertices.size() < 3) {
      std::cerr << "warning: skipping region with " << poly.vertices.size()
                << " vertices (line " << node.line << ")\n";
    } else {
      out.polygons.push_back(std::move(poly));
    }
    return;
  }
  for (const auto& child : node.children) collect_regions(child, out);
}

}  // namespace

AnnotationSet parse_annotations(const std::string& xml_text) {
  const xml::Node root = xml::parse_document(xml_text);
  AnnotationSet out;
  collect_regions(root, out);
  return out;
}

Mask rasterize(const AnnotationSet& annotations, int h, int w) {
  Mask mask(h, w);  // background-initialised
  for (const auto& poly : annotations.polygons) {
    std::vector<std::array<double, 2>> pts = poly.vertices;
    double min_x = w, max_x = 0, min_y = h, max_y = 0;
    for (auto& p : pts) {
      p[0] = std::clamp(p[0], 0.0, static_cast<double>(w));
      p[1] = std::clamp(p[1], 0.0, static_cast<double>(h));
      min_x = std::min(min_x, p[0]);
      max_x = std::max(max_x, p[0]);
      min_y = std::min(min_y, p[1]);
      max_y = std::max(max_y, p[1]);
    }
    const int y0 = std::max(0, static_cast<int>(std::floor(min_y - 0.5)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(max_y)));
    const int x0 = std::max(0, static_cast<int>(std::floor(min_x - 0.5)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(max_x)));
    const std::size_t n = pts.size();
#pragma omp parallel for schedule(static)
    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        bool inside = false;
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
          const double yi = pts[i][1], yj = pts[j][1];
          if ((yi > py) != (yj > py)) {
            const double xint = pts[j][0] + (py - yj) * (pts[i][0] - pts[j][0]) / (yi - yj);
            if (px < xint) inside = !inside;
          }
        }
        if (inside) mask.at(y, x) = 0;
      }
    }
  }
  return mask;
}

namespace {

template <typename Get, typename Set>
void remap(int in_h, int in_w, Orientation o, int& out_h, int& out_w, Get get, Set set) {
  const bool swaps = o == Orientation::rot90 || o == Orientation::rot270;
  out_h = swaps ? in_w : in_h;
  out_w = swaps ? in_h : in_w;
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      int sy = y, sx = x;
      switch (o) {
        case Orientation::identity: break;
        case Orientation::hflip: sx = in_w - 1 - x; break;
        case Orientation::vflip: sy = in_h - 1 - y; break;
        case Orientation::rot90:  // counterclockwise: right column becomes top row
          sy = x;
          sx = in_w - 1 - y;
          break;
        case Orientation::rot180:
          sy = in_h - 1 - y;
          sx = in_w - 1 - x;
          break;
        case Orientation::rot270:
          sy = in_h - 1 - x;
          sx = y;
          break;
      }
      set(y, x, get(sy, sx));
    }
  }
}

}  // namespace

ImageU8 apply_orientation(const ImageU8& img, Orientation o) {
  ImageU8 out;
  out.channels = img.channels;
  int oh = 0, ow = 0;
  const bool swaps = o == Orientation::rot90 || o == Orientation::rot270;
  out.h = swaps ? img.w : img.h;
  out.w = swaps ? img.h : img.w;
  out.data.resize(img.data.size());
  out.id = img.id;
  remap(
      img.h, img.w, o, oh, ow, [&](int y, int x) { return std::pair<int, int>(y, x); },
      [&](int y, int x, std::pair<int, int> src) {
        for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(src.first, src.second, c);
      });
  return out;
}

Mask apply_orientation(const Mask& mask, Orientation o) {
  Mask out;
  int oh = 0, ow = 0;
  const bool swaps = o == Orientation::rot90 || o == Orientation::rot270;
  out.h = swaps ? mask.w : mask.h;
  out.w = swaps ? mask.h : mask.w;
  out.labels.resize(mask.labels.size());
  remap(
      mask.h, mask.w, o, oh, ow, [&](int y, int x) { return mask.at(y, x); },
      [&](int y, int x, std::uint8_t v) { out.at(y, x) = v; });
  return out;
}

ImageU8 zoom_image(const ImageU8& img, double scale) {
  if (scale <= 0) throw std::invalid_argument("zoom: scale must be positive");
  const int oh = std::max(1, static_cast<int>(std::lround(img.h * scale)));
  const int ow = std::max(1, static_cast<int>(std::lround(img.w * scale)));
  // channel planes through the shared bilinear kernel
  std::vector<float> plane_in(static_cast<std::size_t>(img.h) * img.w);
  std::vector<float> plane_out(static_cast<std::size_t>(oh) * ow);
  ImageU8 out(oh, ow, img.channels);
  out.id = img.id;
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        plane_in[static_cast<std::size_t>(y) * img.w + x] = img.at(y, x, c);
    kernels::bilinear_resize(plane_in.data(), plane_out.data(), 1, img.h, img.w, oh, ow);
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        const float v = plane_out[static_cast<std::size_t>(y) * ow + x];
        out.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
      }
  }
  return out;
}

Mask zoom_mask(const Mask& mask, double scale) {
  if (scale <= 0) throw std::invalid_argument("zoom: scale must be positive");
  const int oh = std::max(1, static_cast<int>(std::lround(mask.h * scale)));
  const int ow = std::max(1, static_cast<int>(std::lround(mask.w * scale)));
  Mask out(oh, ow);
  for (int y = 0; y < oh; ++y) {
    const double sy = (y + 0.5) * mask.h / oh - 0.5;
    const int iy = std::clamp(static_cast<int>(std::lround(sy)), 0, mask.h - 1);
    for (int x = 0; x < ow; ++x) {
      const double sx = (x + 0.5) * mask.w / ow - 0.5;
      const int ix = std::clamp(static_cast<int>(std::lround(sx)), 0, mask.w - 1);
      out.at(y, x) = mask.at(iy, ix);
    }
  }
  return out;
}

std::vector<SamplePair> augment_stage1(const std::vector<SamplePair>& in) {
  std::vector<SamplePair> out;
  out.reserve(in.size() * kOrientations.size());
  for (const auto& s : in)
    for (Orientation o : kOrientations)
      out.push_back({apply_orientation(s.image, o), apply_orientation(s.mask, o)});
  return out;
}

std::vector<SamplePair> augment_stage2(const std::vector<SamplePair>& in,
                                       const std::vector<double>& scales) {
  std::vector<SamplePair> out;
  out.reserve(in.size() * scales.size());
  for (const auto& s : in)
    for (double scale : scales)
      out.push_back({zoom_image(s.image, scale), zoom_mask(s.mask, scale)});
  return out;
}

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

namespace {

SamplePair reflect_pad_to(const SamplePair& s, int side) {
  const int h = std::max(s.image.h, side), w = std::max(s.image.w, side);
  SamplePair out;
  out.image = ImageU8(h, w, s.image.channels);
  out.image.id = s.image.id;
  out.mask = Mask(h, w);
  for (int y = 0; y < h; ++y) {
    const int sy = reflect_index(y, s.image.h);
    for (int x = 0; x < w; ++x) {
      const int sx = reflect_index(x, s.image.w);
      for (int c = 0; c < s.image.channels; ++c) out.image.at(y, x, c) = s.image.at(sy, sx, c);
      out.mask.at(y, x) = s.mask.at(sy, sx);
    }
  }
  return out;
}

}  // namespace

SamplePair random_crop(const SamplePair& sample, int side, std::mt19937_64& rng) {
  const SamplePair* src = &sample;
  SamplePair padded;
  if (sample.image.h < side || sample.image.w < side) {
    padded = reflect_pad_to(sample, side);
    src = &padded;
  }
  std::uniform_int_distribution<int> dy(0, src->image.h - side);
  std::uniform_int_distribution<int> dx(0, src->image.w - side);
  const int oy = dy(rng);
  const int ox = dx(rng);
  SamplePair out;
  out.image = ImageU8(side, side, src->image.channels);
  out.image.id = src->image.id;
  out.mask = Mask(side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      for (int c = 0; c < src->image.channels; ++c)
        out.image.at(y, x, c) = src->image.at(oy + y, ox + x, c);
      out.mask.at(y, x) = src->mask.at(oy + y, ox + x);
    }
  return out;
}

NormalizationStats compute_stats(const std::vector<ImageU8>& images) {
  if (images.empty()) throw std::invalid_argument("compute_stats: empty image set");
  std::array<double, 3> sum{0, 0, 0}, sumsq{0, 0, 0};
  double count = 0;
  for (const auto& img : images) {
    if (img.channels != 3) throw std::invalid_argument("compute_stats: expected RGB images");
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        for (int c = 0; c < 3; ++c) {
          const double v = img.at(y, x, c) / 255.0;
          sum[c] += v;
          sumsq[c] += v * v;
        }
    count += static_cast<double>(img.h) * img.w;
  }
  NormalizationStats stats;
  for (int c = 0; c < 3; ++c) {
    stats.mean[c] = sum[c] / count;
    const double var = std::max(0.0, sumsq[c] / count - stats.mean[c] * stats.mean[c]);
    stats.stddev[c] = std::sqrt(var);
  }
  return stats;
}

NormalizationStats image_stats(const ImageU8& image) { return compute_stats({image}); }

Tensor<float> normalize_global(const ImageU8& image, const NormalizationStats& stats) {
  if (image.channels != 3) throw std::invalid_argument("normalize: expected RGB image");
  Tensor<float> out({3, image.h, image.w});
  for (int c = 0; c < 3; ++c) {
    const float mu = static_cast<float>(stats.mean[c]);
    const float sigma =
        static_cast<float>(stats.stddev[c] > 0 ? stats.stddev[c] : kSigmaFloor);
    for (int y = 0; y < image.h; ++y)
      for (int x = 0; x < image.w; ++x)
        out.at(c, y, x) = (image.at(y, x, c) / 255.0f - mu) / sigma;
  }
  return out;
}

Tensor<float> normalize_individual(const ImageU8& image) {
  return normalize_global(image, image_stats(image));
}

Tensor<float> standardize_channels(const Tensor<float>& t) {
  if (t.ndim() != 3) throw std::invalid_argument("standardize: rank-3 expected");
  Tensor<float> out(t.shape);
  const int hw = t.dim(1) * t.dim(2);
  for (int c = 0; c < t.dim(0); ++c) {
    const float* src = t.data() + static_cast<std::size_t>(c) * hw;
    float* dst = out.data() + static_cast<std::size_t>(c) * hw;
    double mu = 0;
    for (int i = 0; i < hw; ++i) mu += src[i];
    mu /= hw;
    double var = 0;
    for (int i = 0; i < hw; ++i) var += (src[i] - mu) * (src[i] - mu);
    var /= hw;
    const double sigma = var > 0 ? std::sqrt(var) : kSigmaFloor;
    for (int i = 0; i < hw; ++i)
      dst[i] = static_cast<float>((src[i] - mu) / sigma);
  }
  return out;
}

void save_stats(const std::string& path, const NormalizationStats& stats) {
  nlohmann::json j;
  j["mean"] = stats.mean;
  j["stddev"] = stats.stddev;
  j["pixel_scale"] = "unit";  // statistics taken on values divided by 255
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << "\n";
}

NormalizationStats load_stats(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  is >> j;
  NormalizationStats stats;
  for (int c = 0; c < 3; ++c) {
    stats.mean[c] = j.at("mean").at(c).get<double>();
    stats.stddev[c] = j.at("stddev").at(c).get<double>();
  }
  return stats;
}

}  // namespace aenet
