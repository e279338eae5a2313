#pragma once

#include <cstdint>
#include <vector>

#include "aenet/image.hpp"
#include "aenet/tensor.hpp"

namespace aenet {

/// Euclidean distance (in pixels) from each foreground pixel to the nearest
/// background pixel; exactly zero on background.
struct DistanceMap {
  int h = 0, w = 0;
  std::vector<double> values;

  DistanceMap() = default;
  DistanceMap(int h_, int w_) : h(h_), w(w_), values(static_cast<std::size_t>(h_) * w_, 0) {}
  double& at(int y, int x) { return values[static_cast<std::size_t>(y) * w + x]; }
  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * w + x]; }
};

/// 0 = unknown, 1 = sure background, k >= 2 = sure-foreground component k-1.
struct MarkerMap {
  int h = 0, w = 0;
  std::vector<std::int32_t> labels;
  int foreground_markers = 0;

  MarkerMap() = default;
  MarkerMap(int h_, int w_) : h(h_), w(w_), labels(static_cast<std::size_t>(h_) * w_, 0) {}
  std::int32_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * w + x]; }
  std::int32_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * w + x]; }
};

/// Exact transform (separable squared-distance lower-envelope passes). Masks
/// with no background pixel at all fall back to the distance to a virtual
/// background border just outside the image.
DistanceMap distance_transform(const Mask& mask);

struct MarkerConfig {
  double threshold_frac = 0.5;  // fraction of the global distance maximum
  double background_margin = 3.0;  // background closer than this to any cell pixel is unknown
};

/// Sure foreground at dist >= frac * max (8-connected components labelled from
/// 2 in scan order); sure background where dist is 0 and farther than the
/// margin from any foreground pixel; everything else unknown.
MarkerMap extract_markers(const DistanceMap& dist, const MarkerConfig& cfg = {});

/// Priority flood (highest distance first, FIFO among equal priorities).
/// Instance labels grow 4-connected through foreground, the background label
/// through background; pixels where two instances meet become boundary (0).
LabeledMask watershed_flood(const DistanceMap& topography, const MarkerMap& markers);

struct PostprocessConfig {
  double binarize_threshold = 0.5;
  MarkerConfig markers;
  int min_component_size = 10;  // pixels; smaller specks removed up front
};

struct PostprocessResult {
  Mask refined;
  LabeledMask instances;
};

/// binarize -> remove sub-min-size components -> distance transform ->
/// markers -> flood. The refined mask is the union of flooded instances.
PostprocessResult postprocess(const Tensor<float>& prob, const PostprocessConfig& cfg = {});

/// 8-connected components of the cell class smaller than min_size flipped to
/// background; returns the cleaned mask.
Mask remove_small_components(const Mask& mask, int min_size);

}  // namespace aenet
