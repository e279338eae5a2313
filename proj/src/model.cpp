#include "aenet/model.hpp"

#include <cmath>
#include <stdexcept>

namespace aenet {

namespace {

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
    throw std::invalid_argument("concat: spatial mismatch");
  Tensor<T> out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy(a.values.begin(), a.values.end(), out.values.begin());
  std::copy(b.values.begin(), b.values.end(), out.values.begin() + a.numel());
  return out;
}

}  // namespace

template <typename T>
Encoder<T>::Encoder(const EncoderConfig& cfg_) : cfg(cfg_) {
  int prev = 3;
  for (int stage = 0; stage < 5; ++stage) {
    const int width = cfg.widths[stage];
    if (width < 1) throw std::invalid_argument("encoder: width must be positive");
    for (int i = 0; i < kEncoderStageDepth[stage]; ++i) {
      convs.emplace_back("enc.s" + std::to_string(stage) + ".c" + std::to_string(i), prev,
                         width, 3, 1, 1);
      prev = width;
    }
  }
  relus.resize(convs.size());
}

template <typename T>
void Encoder<T>::init(std::uint64_t seed) {
  for (auto& c : convs) c.init_he(seed);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> Encoder<T>::forward(const Tensor<T>& image) {
  if (image.ndim() != 3 || image.dim(0) != 3)
    throw std::invalid_argument("encoder: expected 3×H×W input");
  if (image.dim(1) % kOutputStride != 0 || image.dim(2) % kOutputStride != 0)
    throw std::invalid_argument("encoder: input sides must be divisible by 16");
  Tensor<T> x = image;
  std::size_t li = 0;
  for (int stage = 0; stage < 5; ++stage) {
    for (int i = 0; i < kEncoderStageDepth[stage]; ++i, ++li)
      x = relus[li].forward(convs[li].forward(x));
    if (stage < 4) x = pools[stage].forward(x);
  }
  Tensor<T> v1 = gap.forward(x);
  return {x, v1};
}

template <typename T>
Tensor<T> Encoder<T>::backward(const Tensor<T>& g_f1, const Tensor<T>& g_v1) {
  Tensor<T> g = gap.backward(g_v1);
  for (std::size_t i = 0; i < g.numel(); ++i) g.values[i] += g_f1.values[i];
  std::size_t li = convs.size();
  for (int stage = 4; stage >= 0; --stage) {
    if (stage < 4) g = pools[stage].backward(g);
    for (int i = kEncoderStageDepth[stage] - 1; i >= 0; --i) {
      --li;
      g = convs[li].backward(relus[li].backward(g));
    }
  }
  return g;
}

template <typename T>
void Encoder<T>::params(std::vector<ParamRef<T>>& out) {
  for (auto& c : convs) c.params(out);
}

template <typename T>
void Encoder<T>::zero_grad() {
  for (auto& c : convs) c.zero_grad();
}

template <typename T>
Decoder<T>::Decoder(std::string name, int in_c_, std::array<int, 2> widths_)
    : in_c(in_c_), widths(widths_) {
  conv1 = Conv2d<T>(name + ".c1", in_c, widths[0], 3, 1, 1);
  conv2 = Conv2d<T>(name + ".c2", widths[0], widths[1], 3, 1, 1);
  bn1 = BatchNormReLU<T>(name + ".bn1", widths[0]);
  bn2 = BatchNormReLU<T>(name + ".bn2", widths[1]);
}

template <typename T>
void Decoder<T>::init(std::uint64_t seed) {
  conv1.init_he(seed);
  conv2.init_he(seed);
}

template <typename T>
Tensor<T> Decoder<T>::forward(const Tensor<T>& f, int image_h, int image_w, bool training) {
  Tensor<T> x = up1.forward(f, image_h / 4, image_w / 4);
  x = bn1.forward(conv1.forward(x), training);
  x = up2.forward(x, image_h, image_w);
  x = bn2.forward(conv2.forward(x), training);
  return x;
}

template <typename T>
Tensor<T> Decoder<T>::backward(const Tensor<T>& gy) {
  Tensor<T> g = conv2.backward(bn2.backward(gy));
  g = up2.backward(g);
  g = conv1.backward(bn1.backward(g));
  return up1.backward(g);
}

template <typename T>
void Decoder<T>::params(std::vector<ParamRef<T>>& out) {
  conv1.params(out);
  bn1.params(out);
  conv2.params(out);
  bn2.params(out);
}

template <typename T>
void Decoder<T>::zero_grad() {
  conv1.zero_grad();
  bn1.zero_grad();
  conv2.zero_grad();
  bn2.zero_grad();
}

template <typename T>
FeatureFusion<T>::FeatureFusion(std::string name, int f2_channels_, int v1_channels_)
    : f2_channels(f2_channels_), v1_channels(v1_channels_) {
  low_conv = Conv2d<T>(name + ".low", 3, 32, 3, 1, 1);
  low_bn = BatchNormReLU<T>(name + ".low_bn", 32);
  high_proj = Conv2d<T>(name + ".high", v1_channels, 32, 1);
  merge_conv = Conv2d<T>(name + ".merge", 32 + f2_channels, 32, 3, 1, 1);
  classifier = Conv2d<T>(name + ".cls", 32, 2, 1);
}

template <typename T>
void FeatureFusion<T>::init(std::uint64_t seed) {
  low_conv.init_he(seed);
  high_proj.init_he(seed);
  merge_conv.init_he(seed);
  classifier.init_he(seed);
}

template <typename T>
Tensor<T> FeatureFusion<T>::forward(const Tensor<T>& image, const Tensor<T>& f2,
                                    const Tensor<T>& v1, bool training) {
  if (f2.dim(0) != f2_channels) throw std::invalid_argument("fusion: f2 channel mismatch");
  if (f2.dim(1) != image.dim(1) || f2.dim(2) != image.dim(2))
    throw std::invalid_argument("fusion: f2 must be at image resolution");
  Tensor<T> f_low = low_bn.forward(low_conv.forward(image), training);
  f_high_cache = high_proj.forward(v1.reshaped({v1_channels, 1, 1})).reshaped({32});
  f_low_map_cache = merge_conv.forward(concat_channels(f_low, f2));
  // multiplicative gate, broadcast over space
  Tensor<T> f_high_map(f_low_map_cache.shape);
  const int hw = f_low_map_cache.dim(1) * f_low_map_cache.dim(2);
  for (int c = 0; c < 32; ++c) {
    const T g = f_high_cache.values[c];
    const T* src = f_low_map_cache.data() + static_cast<std::size_t>(c) * hw;
    T* dst = f_high_map.data() + static_cast<std::size_t>(c) * hw;
    for (int i = 0; i < hw; ++i) dst[i] = src[i] * g;
  }
  return classifier.forward(f_high_map);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> FeatureFusion<T>::backward(const Tensor<T>& g_logits) {
  Tensor<T> g_fhm = classifier.backward(g_logits);
  const int hw = f_low_map_cache.dim(1) * f_low_map_cache.dim(2);
  Tensor<T> g_flm(f_low_map_cache.shape);
  Tensor<T> g_fhigh({32});
  for (int c = 0; c < 32; ++c) {
    const T g = f_high_cache.values[c];
    const T* gin = g_fhm.data() + static_cast<std::size_t>(c) * hw;
    const T* lm = f_low_map_cache.data() + static_cast<std::size_t>(c) * hw;
    T* gout = g_flm.data() + static_cast<std::size_t>(c) * hw;
    T acc = T(0);
    for (int i = 0; i < hw; ++i) {
      gout[i] = gin[i] * g;
      acc += gin[i] * lm[i];
    }
    g_fhigh.values[c] = acc;
  }
  Tensor<T> g_concat = merge_conv.backward(g_flm);
  // split the concatenation: first 32 channels belong to the low path
  Tensor<T> g_flow({32, g_concat.dim(1), g_concat.dim(2)});
  Tensor<T> g_f2({f2_channels, g_concat.dim(1), g_concat.dim(2)});
  std::copy(g_concat.values.begin(), g_concat.values.begin() + g_flow.numel(),
            g_flow.values.begin());
  std::copy(g_concat.values.begin() + g_flow.numel(), g_concat.values.end(),
            g_f2.values.begin());
  low_conv.backward(low_bn.backward(g_flow));  // image gradient discarded
  Tensor<T> g_v1 =
      high_proj.backward(g_fhigh.reshaped({32, 1, 1})).reshaped({v1_channels});
  return {std::move(g_f2), std::move(g_v1)};
}

template <typename T>
void FeatureFusion<T>::params(std::vector<ParamRef<T>>& out) {
  low_conv.params(out);
  low_bn.params(out);
  high_proj.params(out);
  merge_conv.params(out);
  classifier.params(out);
}

template <typename T>
void FeatureFusion<T>::zero_grad() {
  low_conv.zero_grad();
  low_bn.zero_grad();
  high_proj.zero_grad();
  merge_conv.zero_grad();
  classifier.zero_grad();
}

template <typename T>
AENet<T>::AENet(const AENetConfig& cfg_) : cfg(cfg_), encoder(cfg_.encoder) {
  const int top = encoder.top_width();
  if (cfg.use_sam)
    sam.emplace("sam", top, cfg.sam_qk_channels, cfg.sam_v_channels);
  decoder = Decoder<T>("dec", top, cfg.decoder_widths);
  if (cfg.use_ffb)
    fusion.emplace("ffb", decoder.out_width(), top);
  else
    plain_head.emplace("head.cls", decoder.out_width(), 2, 1);
}

template <typename T>
void AENet<T>::init(std::uint64_t seed) {
  encoder.init(seed);
  if (sam) sam->init(seed);
  decoder.init(seed);
  if (fusion) fusion->init(seed);
  if (plain_head) plain_head->init_he(seed);
}

template <typename T>
Tensor<T> AENet<T>::forward_logits(const Tensor<T>& image, bool training) {
  image_cache = image;
  auto [f1, v1] = encoder.forward(image);
  v1_cache = v1;
  if (sam) f1 = sam->forward(f1);
  Tensor<T> f2 = decoder.forward(f1, image.dim(1), image.dim(2), training);
  if (cfg.use_cam) f2 = cam.forward(f2);
  if (fusion) return fusion->forward(image, f2, v1, training);
  return plain_head->forward(f2);
}

template <typename T>
void AENet<T>::backward(const Tensor<T>& g_logits) {
  Tensor<T> g_f2;
  Tensor<T> g_v1({encoder.top_width()});
  if (fusion) {
    auto [gf2, gv1] = fusion->backward(g_logits);
    g_f2 = std::move(gf2);
    g_v1 = std::move(gv1);
  } else {
    g_f2 = plain_head->backward(g_logits);
  }
  if (cfg.use_cam) g_f2 = cam.backward(g_f2);
  Tensor<T> g_f1 = decoder.backward(g_f2);
  if (sam) g_f1 = sam->backward(g_f1);
  encoder.backward(g_f1, g_v1);
}

template <typename T>
Tensor<T> AENet<T>::forward_prob(const Tensor<T>& image) {
  Tensor<T> logits = forward_logits(image, /*training=*/false);
  return cell_probability(logits);
}

template <typename T>
std::vector<ParamRef<T>> AENet<T>::params() {
  std::vector<ParamRef<T>> out;
  encoder.params(out);
  if (sam) sam->params(out);
  decoder.params(out);
  if (fusion) fusion->params(out);
  if (plain_head) plain_head->params(out);
  return out;
}

template <typename T>
void AENet<T>::zero_grad() {
  encoder.zero_grad();
  if (sam) sam->zero_grad();
  decoder.zero_grad();
  if (fusion) fusion->zero_grad();
  if (plain_head) plain_head->zero_grad();
}

double lr_schedule(int epoch, long long iter, long long total_iter, const TrainConfig& cfg) {
  if (epoch >= cfg.max_epochs) throw std::invalid_argument("lr_schedule: epoch out of range");
  if (epoch < 50) return cfg.initial_lr;
  if (epoch < 80) return cfg.initial_lr / 2.0;
  const double progress =
      total_iter > 0 ? static_cast<double>(iter) / static_cast<double>(total_iter) : 0.0;
  return cfg.initial_lr * std::pow(1.0 - progress, cfg.poly_exponent);
}

template <typename T>
T train_step(AENet<T>& net, Adam<T>& opt, const std::vector<ParamRef<T>>& params,
             const std::vector<std::pair<Tensor<T>, Mask>>& batch, double lr,
             const TrainConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  net.zero_grad();
  SoftmaxCrossEntropy<T> loss;
  loss.weight_cell = static_cast<T>(cfg.class_weight_cell);
  loss.weight_bg = static_cast<T>(cfg.class_weight_bg);
  T total = T(0);
  const T upstream = T(1) / static_cast<T>(batch.size());
  for (const auto& [image, mask] : batch) {
    Tensor<T> logits = net.forward_logits(image, /*training=*/true);
    const T l = loss.forward(logits, mask);
    if (!std::isfinite(static_cast<double>(l)))
      throw std::runtime_error("train_step: non-finite loss");
    total += l;
    net.backward(loss.backward(upstream));
  }
  opt.step(params, lr);
  return total * upstream;
}

#define AENET_INSTANTIATE_MODEL(T)                                                       \
  template struct Encoder<T>;                                                            \
  template struct Decoder<T>;                                                            \
  template struct FeatureFusion<T>;                                                      \
  template struct AENet<T>;                                                              \
  template T train_step<T>(AENet<T>&, Adam<T>&, const std::vector<ParamRef<T>>&,         \
                           const std::vector<std::pair<Tensor<T>, Mask>>&, double,       \
                           const TrainConfig&);

AENET_INSTANTIATE_MODEL(float)
AENET_INSTANTIATE_MODEL(double)

}  // namespace aenet
