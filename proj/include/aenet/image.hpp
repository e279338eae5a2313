#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aenet {

/// 8-bit interleaved image, HWC order.
struct ImageU8 {
  int h = 0, w = 0, channels = 0;
  std::vector<std::uint8_t> data;
  std::string id;

  ImageU8() = default;
  ImageU8(int h_, int w_, int channels_)
      : h(h_), w(w_), channels(channels_),
        data(static_cast<std::size_t>(h_) * w_ * channels_, 0) {}

  std::uint8_t& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * w + x) * channels + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * w + x) * channels + c];
  }
};

/// Binary pixel mask: 0 = cell (positive class), 1 = background.
struct Mask {
  int h = 0, w = 0;
  std::vector<std::uint8_t> labels;

  Mask() = default;
  Mask(int h_, int w_) : h(h_), w(w_), labels(static_cast<std::size_t>(h_) * w_, 1) {}

  std::uint8_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * w + x]; }
  std::uint8_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * w + x]; }
  std::size_t size() const { return labels.size(); }
};

/// Instance labelling: 0 = background or watershed boundary, k >= 1 = instance k.
struct LabeledMask {
  int h = 0, w = 0;
  std::vector<std::int32_t> labels;
  int instances = 0;

  LabeledMask() = default;
  LabeledMask(int h_, int w_) : h(h_), w(w_), labels(static_cast<std::size_t>(h_) * w_, 0) {}

  std::int32_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * w + x]; }
  std::int32_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * w + x]; }
};

}  // namespace aenet
