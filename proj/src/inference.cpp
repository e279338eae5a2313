#include "aenet/inference.hpp"

#include <cmath>
#include <stdexcept>

#include "aenet/imaging.hpp"
#include "aenet/kernels.hpp"

namespace aenet {

TilingPlan make_tiling_plan(int h, int w, int patch) {
  if (h < 1 || w < 1 || patch < 1) throw std::invalid_argument("tiling: bad dimensions");
  TilingPlan plan;
  plan.image_h = h;
  plan.image_w = w;
  plan.patch = patch;
  plan.rows = (h + patch - 1) / patch;
  plan.cols = (w + patch - 1) / patch;
  plan.padded_h = plan.rows * patch;
  plan.padded_w = plan.cols * patch;
  return plan;
}

Tensor<float> reflect_pad(const Tensor<float>& t, int target_h, int target_w) {
  const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
  if (target_h < h || target_w < w) throw std::invalid_argument("reflect_pad: shrinking");
  if (target_h == h && target_w == w) return t;
  Tensor<float> out({c, target_h, target_w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < target_h; ++y) {
      const int sy = reflect_index(y, h);
      for (int x = 0; x < target_w; ++x) out.at(ch, y, x) = t.at(ch, sy, reflect_index(x, w));
    }
  return out;
}

std::vector<Tensor<float>> tile(const Tensor<float>& image, const TilingPlan& plan) {
  if (image.dim(1) != plan.image_h || image.dim(2) != plan.image_w)
    throw std::invalid_argument("tile: plan does not match the image");
  const Tensor<float> padded = reflect_pad(image, plan.padded_h, plan.padded_w);
  const int c = padded.dim(0), p = plan.patch;
  std::vector<Tensor<float>> patches;
  patches.reserve(plan.patch_count());
  for (int r = 0; r < plan.rows; ++r)
    for (int col = 0; col < plan.cols; ++col) {
      Tensor<float> t({c, p, p});
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < p; ++y)
          for (int x = 0; x < p; ++x) t.at(ch, y, x) = padded.at(ch, r * p + y, col * p + x);
      patches.push_back(std::move(t));
    }
  return patches;
}

Tensor<float> stitch(const std::vector<Tensor<float>>& patches, const TilingPlan& plan) {
  if (static_cast<int>(patches.size()) != plan.patch_count())
    throw std::invalid_argument("stitch: patch count does not match the plan");
  const int c = patches.front().dim(0), p = plan.patch;
  Tensor<float> canvas({c, plan.padded_h, plan.padded_w});
  for (int r = 0; r < plan.rows; ++r)
    for (int col = 0; col < plan.cols; ++col) {
      const Tensor<float>& t = patches[static_cast<std::size_t>(r) * plan.cols + col];
      if (t.dim(0) != c || t.dim(1) != p || t.dim(2) != p)
        throw std::invalid_argument("stitch: patch shape mismatch");
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < p; ++y)
          for (int x = 0; x < p; ++x) canvas.at(ch, r * p + y, col * p + x) = t.at(ch, y, x);
    }
  if (plan.padded_h == plan.image_h && plan.padded_w == plan.image_w) return canvas;
  Tensor<float> out({c, plan.image_h, plan.image_w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < plan.image_h; ++y)
      for (int x = 0; x < plan.image_w; ++x) out.at(ch, y, x) = canvas.at(ch, y, x);
  return out;
}

Tensor<float> hflip(const Tensor<float>& t) {
  Tensor<float> out(t.shape);
  const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(ch, y, x) = t.at(ch, y, w - 1 - x);
  return out;
}

namespace {

Tensor<float> resize_chw(const Tensor<float>& t, int oh, int ow) {
  if (t.dim(1) == oh && t.dim(2) == ow) return t;
  Tensor<float> out({t.dim(0), oh, ow});
  kernels::bilinear_resize(t.data(), out.data(), t.dim(0), t.dim(1), t.dim(2), oh, ow);
  return out;
}

Tensor<float> tiled_forward(const Tensor<float>& image, const ModelFn& model, int patch) {
  const TilingPlan plan = make_tiling_plan(image.dim(1), image.dim(2), patch);
  std::vector<Tensor<float>> prob_patches;
  prob_patches.reserve(plan.patch_count());
  for (Tensor<float>& p : tile(image, plan)) {
    Tensor<float> prob = model(p);
    if (prob.ndim() != 3 || prob.dim(0) != 1 || prob.dim(1) != plan.patch ||
        prob.dim(2) != plan.patch)
      throw std::runtime_error("multiscale_infer: model returned unexpected shape");
    prob_patches.push_back(std::move(prob));
  }
  return stitch(prob_patches, plan);
}

}  // namespace

Tensor<float> multiscale_infer(const Tensor<float>& image, const ModelFn& model,
                               const EnsembleConfig& cfg) {
  if (cfg.scales.empty()) throw std::invalid_argument("multiscale_infer: empty scale list");
  for (double s : cfg.scales)
    if (s <= 0) throw std::invalid_argument("multiscale_infer: scales must be positive");
  const int h = image.dim(1), w = image.dim(2);
  Tensor<float> accum({1, h, w});
  int passes = 0;
  for (double scale : cfg.scales) {
    const int sh = std::max(1, static_cast<int>(std::lround(h * scale)));
    const int sw = std::max(1, static_cast<int>(std::lround(w * scale)));
    const Tensor<float> scaled = resize_chw(image, sh, sw);
    for (int flip_pass = 0; flip_pass < (cfg.flip ? 2 : 1); ++flip_pass) {
      const bool flipped = flip_pass == 1;
      Tensor<float> prob =
          tiled_forward(flipped ? hflip(scaled) : scaled, model, cfg.patch);
      if (flipped) prob = hflip(prob);
      prob = resize_chw(prob, h, w);
      for (std::size_t i = 0; i < accum.numel(); ++i) accum.values[i] += prob.values[i];
      ++passes;
    }
  }
  const float inv = 1.0f / static_cast<float>(passes);
  for (float& v : accum.values) v *= inv;
  return accum;
}

Mask binarize(const Tensor<float>& prob, double threshold) {
  if (threshold <= 0.0 || threshold >= 1.0)
    throw std::invalid_argument("binarize: threshold must lie in (0,1)");
  const int h = prob.ndim() == 3 ? prob.dim(1) : prob.dim(0);
  const int w = prob.ndim() == 3 ? prob.dim(2) : prob.dim(1);
  Mask mask(h, w);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask.labels[i] = prob.values[i] >= threshold ? 0 : 1;
  return mask;
}

ModelFn with_padding_to_multiple(ModelFn inner, int multiple) {
  return [inner = std::move(inner), multiple](const Tensor<float>& image) {
    const int h = image.dim(1), w = image.dim(2);
    const int ph = (h + multiple - 1) / multiple * multiple;
    const int pw = (w + multiple - 1) / multiple * multiple;
    Tensor<float> prob = inner(reflect_pad(image, ph, pw));
    if (ph == h && pw == w) return prob;
    Tensor<float> out({1, h, w});
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(0, y, x) = prob.at(0, y, x);
    return out;
  };
}

}  // namespace aenet
