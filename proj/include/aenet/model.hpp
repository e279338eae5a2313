#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aenet/attention.hpp"
#include "aenet/layers.hpp"
#include "aenet/tensor.hpp"

namespace aenet {

/// VGG16-style backbone: 13 conv+relu layers in five stages, max-pool after
/// the first four stages (output stride 16, the fifth pool is dropped).
struct EncoderConfig {
  std::array<int, 5> widths{64, 128, 256, 512, 512};

  static EncoderConfig vgg16() { return {}; }
  static EncoderConfig toy() { return {{8, 16, 32, 64, 64}}; }
};

inline constexpr std::array<int, 5> kEncoderStageDepth{2, 2, 3, 3, 3};
inline constexpr int kOutputStride = 16;

template <typename T>
struct Encoder {
  EncoderConfig cfg;
  std::vector<Conv2d<T>> convs;
  std::vector<ReLU<T>> relus;
  std::array<MaxPool2<T>, 4> pools;
  GlobalAvgPool<T> gap;

  Encoder() = default;
  explicit Encoder(const EncoderConfig& cfg_);

  void init(std::uint64_t seed);
  /// image 3×H×W (H, W divisible by 16) -> {f1: C×H/16×W/16, v1: C}
  std::pair<Tensor<T>, Tensor<T>> forward(const Tensor<T>& image);
  Tensor<T> backward(const Tensor<T>& g_f1, const Tensor<T>& g_v1);
  void params(std::vector<ParamRef<T>>& out);
  void zero_grad();
  int top_width() const { return cfg.widths[4]; }
};

/// Two stages of (bilinear ×4 upsample -> 3×3 conv -> batch-norm -> ReLU)
/// taking the stride-16 map back to full resolution.
template <typename T>
struct Decoder {
  int in_c = 0;
  std::array<int, 2> widths{128, 64};
  BilinearResize<T> up1, up2;
  Conv2d<T> conv1, conv2;
  BatchNormReLU<T> bn1, bn2;

  Decoder() = default;
  Decoder(std::string name, int in_c_, std::array<int, 2> widths_);

  void init(std::uint64_t seed);
  Tensor<T> forward(const Tensor<T>& f, int image_h, int image_w, bool training);
  Tensor<T> backward(const Tensor<T>& gy);
  void params(std::vector<ParamRef<T>>& out);
  void zero_grad();
  int out_width() const { return widths[1]; }
};

/// Low/high feature fusion: a 3×3 conv + BN + ReLU over the raw image (low
/// path, 32 channels), a 1×1 projection of the encoder's pooled vector (high
/// path, 32 channels) gating the merged map multiplicatively, then a 1×1
/// classifier to 2-class logits.
template <typename T>
struct FeatureFusion {
  int f2_channels = 0;
  int v1_channels = 0;
  Conv2d<T> low_conv;
  BatchNormReLU<T> low_bn;
  Conv2d<T> high_proj;
  Conv2d<T> merge_conv;
  Conv2d<T> classifier;

  Tensor<T> f_high_cache;     // 32
  Tensor<T> f_low_map_cache;  // 32×H×W

  FeatureFusion() = default;
  FeatureFusion(std::string name, int f2_channels_, int v1_channels_);

  void init(std::uint64_t seed);
  Tensor<T> forward(const Tensor<T>& image, const Tensor<T>& f2, const Tensor<T>& v1,
                    bool training);
  /// Returns gradients for f2 and v1 (the image is not a parameter path).
  std::pair<Tensor<T>, Tensor<T>> backward(const Tensor<T>& g_logits);
  void params(std::vector<ParamRef<T>>& out);
  void zero_grad();
};

struct AENetConfig {
  EncoderConfig encoder;
  std::array<int, 2> decoder_widths{128, 64};
  int sam_qk_channels = 0;  // 0 -> C/8
  int sam_v_channels = 0;   // 0 -> C
  bool use_sam = true;
  bool use_cam = true;
  bool use_ffb = true;

  static AENetConfig full() { return {}; }
  static AENetConfig toy() {
    AENetConfig c;
    c.encoder = EncoderConfig::toy();
    c.decoder_widths = {16, 8};
    return c;
  }
};

template <typename T>
struct AENet {
  AENetConfig cfg;
  Encoder<T> encoder;
  std::optional<SpatialAttention<T>> sam;
  Decoder<T> decoder;
  ChannelAttention<T> cam;
  std::optional<FeatureFusion<T>> fusion;
  std::optional<Conv2d<T>> plain_head;  // classifier when the fusion branch is off

  Tensor<T> image_cache;
  Tensor<T> v1_cache;

  AENet() = default;
  explicit AENet(const AENetConfig& cfg_);

  void init(std::uint64_t seed);
  Tensor<T> forward_logits(const Tensor<T>& image, bool training);
  void backward(const Tensor<T>& g_logits);
  /// Inference-mode probability of the cell class, 1×H×W in [0,1].
  Tensor<T> forward_prob(const Tensor<T>& image);
  std::vector<ParamRef<T>> params();
  void zero_grad();
};

struct TrainConfig {
  double initial_lr = 0.0006;
  int max_epochs = 150;
  int batch_size = 32;
  double poly_exponent = 0.9;
  double class_weight_cell = 1.0;
  double class_weight_bg = 1.0;
};

/// Three-phase schedule: constant for epochs [0,50), halved on [50,80), then
/// poly decay initial_lr * (1 - iter/total_iter)^exponent.
double lr_schedule(int epoch, long long iter, long long total_iter, const TrainConfig& cfg);

/// One optimizer update over a batch; returns the mean batch loss.
/// Throws on a non-finite loss before any parameter is touched.
template <typename T>
T train_step(AENet<T>& net, Adam<T>& opt, const std::vector<ParamRef<T>>& params,
             const std::vector<std::pair<Tensor<T>, Mask>>& batch, double lr,
             const TrainConfig& cfg);

}  // namespace aenet
