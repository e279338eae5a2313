#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aenet/image.hpp"
#include "aenet/imaging.hpp"

namespace aenet {

/// Stained-tissue-like images of random ellipse "nuclei" on a light
/// background, with matching polygon annotations, for desk-scale runs.
struct SynthConfig {
  int side = 64;
  int min_blobs = 3;
  int max_blobs = 7;
  double min_radius = 4.0;
  double max_radius = 9.0;
  double noise = 8.0;  // additive pixel noise stddev, 0-255 scale
  std::uint64_t seed = 1;
};

struct SynthSample {
  ImageU8 image;
  Mask mask;
  AnnotationSet annotations;
};

/// Deterministic in (cfg.seed, index).
SynthSample synth_sample(const SynthConfig& cfg, int index);

/// Serialises polygons in the annotation layout `parse_annotations` reads.
std::string annotations_to_xml(const AnnotationSet& annotations);

/// Writes images/, annotations/ and manifest.json under root. Train and
/// same-organ ids draw organ tags from {breast,kidney,liver,prostate};
/// different-organ ids from {bladder,colon,stomach}.
void write_synth_dataset(const std::string& root, const SynthConfig& cfg, int train_count,
                         int same_organ_count, int different_organ_count);

}  // namespace aenet
