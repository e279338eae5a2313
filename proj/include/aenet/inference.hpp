#pragma once

#include <functional>
#include <vector>

#include "aenet/image.hpp"
#include "aenet/tensor.hpp"

namespace aenet {

/// Gap-free cover of the (right/bottom reflect-padded) image by fixed-size
/// patches in row-major order.
struct TilingPlan {
  int image_h = 0, image_w = 0;
  int patch = 200;
  int padded_h = 0, padded_w = 0;
  int rows = 0, cols = 0;

  int patch_count() const { return rows * cols; }
};

TilingPlan make_tiling_plan(int h, int w, int patch = 200);

std::vector<Tensor<float>> tile(const Tensor<float>& image, const TilingPlan& plan);

/// Inverse of tile: reassembles patches and crops the padding away.
Tensor<float> stitch(const std::vector<Tensor<float>>& patches, const TilingPlan& plan);

/// Maps a normalized C×h×w tensor to a 1×h×w probability map.
using ModelFn = std::function<Tensor<float>(const Tensor<float>&)>;

struct EnsembleConfig {
  std::vector<double> scales{0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  bool flip = true;
  double threshold = 0.5;
  int patch = 200;

  int pass_count() const { return static_cast<int>(scales.size()) * (flip ? 2 : 1); }
};

/// Per scale: resize, tile, forward each patch, stitch, resize back; flipped
/// passes are un-flipped; the result is the arithmetic mean over all passes.
Tensor<float> multiscale_infer(const Tensor<float>& image, const ModelFn& model,
                               const EnsembleConfig& cfg);

/// p >= threshold selects cell (label 0).
Mask binarize(const Tensor<float>& prob, double threshold);

Tensor<float> hflip(const Tensor<float>& t);
Tensor<float> reflect_pad(const Tensor<float>& t, int target_h, int target_w);

/// Wraps a model so callers may pass any size: the input is reflect-padded up
/// to the next multiple of `multiple` and the prediction cropped back.
ModelFn with_padding_to_multiple(ModelFn inner, int multiple);

}  // namespace aenet
