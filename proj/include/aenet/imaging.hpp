#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "aenet/image.hpp"
#include "aenet/tensor.hpp"

namespace aenet {

struct Polygon {
  std::vector<std::array<double, 2>> vertices;  // (x, y), sub-pixel
};

struct AnnotationSet {
  std::vector<Polygon> polygons;
};

/// Parses region polygons from an Annotation/Regions/Region/Vertices/Vertex
/// document with X/Y attributes (the public MoNuSeg layout). Unknown elements
/// are ignored; regions with fewer than three vertices are skipped with a
/// warning on stderr. Malformed documents throw xml::ParseError.
AnnotationSet parse_annotations(const std::string& xml_text);

/// Pixels whose centers fall inside any polygon (even-odd rule) become cell.
/// Vertices are clamped to the image bounds first.
Mask rasterize(const AnnotationSet& annotations, int h, int w);

struct SamplePair {
  ImageU8 image;
  Mask mask;
};

enum class Orientation : std::uint8_t {
  identity = 0,
  hflip,
  vflip,
  rot90,   // counterclockwise
  rot180,
  rot270
};
inline constexpr std::array<Orientation, 6> kOrientations{
    Orientation::identity, Orientation::hflip, Orientation::vflip,
    Orientation::rot90,    Orientation::rot180, Orientation::rot270};

inline constexpr std::array<double, 6> kZoomScales{0.5, 0.75, 1.0, 1.25, 1.5, 1.75};

ImageU8 apply_orientation(const ImageU8& img, Orientation o);
Mask apply_orientation(const Mask& mask, Orientation o);

/// Bilinear for image content, nearest for masks (labels stay binary).
ImageU8 zoom_image(const ImageU8& img, double scale);
Mask zoom_mask(const Mask& mask, double scale);

/// Stage 1: 6 orientation variants per input. Stage 2: the zoom scale set.
std::vector<SamplePair> augment_stage1(const std::vector<SamplePair>& in);
std::vector<SamplePair> augment_stage2(const std::vector<SamplePair>& in,
                                       const std::vector<double>& scales = {
                                           kZoomScales.begin(), kZoomScales.end()});

/// Aligned image/mask crop with offsets drawn from the supplied generator.
/// Inputs smaller than the side are reflect-padded first.
SamplePair random_crop(const SamplePair& sample, int side, std::mt19937_64& rng);

/// Per-channel mean / population standard deviation, on the [0,1] pixel scale.
struct NormalizationStats {
  std::array<double, 3> mean{0, 0, 0};
  std::array<double, 3> stddev{0, 0, 0};
};

inline constexpr double kSigmaFloor = 1e-7;

NormalizationStats compute_stats(const std::vector<ImageU8>& images);
NormalizationStats image_stats(const ImageU8& image);

/// (x - mu) / sigma per channel on the [0,1] scale; 3×H×W float output.
Tensor<float> normalize_global(const ImageU8& image, const NormalizationStats& stats);
/// Per-image standardization (the test-time color normalization).
Tensor<float> normalize_individual(const ImageU8& image);
/// Same standardization applied to an already-float 3×H×W tensor.
Tensor<float> standardize_channels(const Tensor<float>& t);

void save_stats(const std::string& path, const NormalizationStats& stats);
NormalizationStats load_stats(const std::string& path);

/// Symmetric (edge-inclusive) reflection of an out-of-range index.
int reflect_index(int i, int n);

}  // namespace aenet
