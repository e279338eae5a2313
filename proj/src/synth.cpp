#include "aenet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "aenet/image_io.hpp"

namespace aenet {

namespace {

constexpr int kEllipseVertices = 24;

Polygon ellipse_polygon(double cx, double cy, double rx, double ry, double angle) {
  Polygon poly;
  poly.vertices.reserve(kEllipseVertices);
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int i = 0; i < kEllipseVertices; ++i) {
    const double t = 2.0 * std::numbers::pi * i / kEllipseVertices;
    const double ex = rx * std::cos(t), ey = ry * std::sin(t);
    poly.vertices.push_back({cx + ex * ca - ey * sa, cy + ex * sa + ey * ca});
  }
  return poly;
}

}  // namespace

SynthSample synth_sample(const SynthConfig& cfg, int index) {
  std::mt19937_64 rng(mix_seed(cfg.seed, "synth_" + std::to_string(index)));
  std::uniform_int_distribution<int> blob_count(cfg.min_blobs, cfg.max_blobs);
  std::uniform_real_distribution<double> pos(0.0, static_cast<double>(cfg.side));
  std::uniform_real_distribution<double> radius(cfg.min_radius, cfg.max_radius);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, cfg.noise);

  SynthSample s;
  const int blobs = blob_count(rng);
  for (int b = 0; b < blobs; ++b) {
    const double cx = pos(rng), cy = pos(rng);
    const double rx = radius(rng), ry = radius(rng);
    s.annotations.polygons.push_back(ellipse_polygon(cx, cy, rx, ry, angle(rng)));
  }
  s.mask = rasterize(s.annotations, cfg.side, cfg.side);

  // light eosin-like background, dark hematoxylin-like nuclei
  const double bg[3] = {228, 205, 215};
  const double fg[3] = {96, 64, 140};
  s.image = ImageU8(cfg.side, cfg.side, 3);
  for (int y = 0; y < cfg.side; ++y)
    for (int x = 0; x < cfg.side; ++x) {
      const bool cell = s.mask.at(y, x) == 0;
      for (int c = 0; c < 3; ++c) {
        const double v = (cell ? fg[c] : bg[c]) + noise(rng);
        s.image.at(y, x, c) =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l));
      }
    }
  return s;
}

std::string annotations_to_xml(const AnnotationSet& annotations) {
  std::string out = "<?xml version=\"1.0\"?>\n<Annotations>\n <Annotation>\n  <Regions>\n";
  char buf[96];
  int id = 1;
  for (const auto& poly : annotations.polygons) {
    std::snprintf(buf, sizeof(buf), "   <Region Id=\"%d\">\n    <Vertices>\n", id++);
    out += buf;
    for (const auto& v : poly.vertices) {
      std::snprintf(buf, sizeof(buf), "     <Vertex X=\"%.4f\" Y=\"%.4f\"/>\n", v[0], v[1]);
      out += buf;
    }
    out += "    </Vertices>\n   </Region>\n";
  }
  out += "  </Regions>\n </Annotation>\n</Annotations>\n";
  return out;
}

void write_synth_dataset(const std::string& root, const SynthConfig& cfg, int train_count,
                         int same_organ_count, int different_organ_count) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(root) / "images");
  fs::create_directories(fs::path(root) / "annotations");

  const std::vector<std::string> seen_organs{"breast", "kidney", "liver", "prostate"};
  const std::vector<std::string> unseen_organs{"bladder", "colon", "stomach"};

  nlohmann::json manifest;
  manifest["train"] = nlohmann::json::array();
  manifest["same_organ_test"] = nlohmann::json::array();
  manifest["different_organ_test"] = nlohmann::json::array();

  int index = 0;
  const auto emit = [&](const std::string& split, const std::string& prefix, int count,
                        const std::vector<std::string>& organs) {
    for (int i = 0; i < count; ++i, ++index) {
      char idbuf[32];
      std::snprintf(idbuf, sizeof(idbuf), "%s_%03d", prefix.c_str(), i);
      const SynthSample s = synth_sample(cfg, index);
      write_png_rgb8((fs::path(root) / "images" / (std::string(idbuf) + ".png")).string(),
                     s.image);
      std::ofstream xf((fs::path(root) / "annotations" / (std::string(idbuf) + ".xml")));
      xf << annotations_to_xml(s.annotations);
      manifest[split].push_back(
          {{"id", idbuf}, {"organ", organs[i % organs.size()]}});
    }
  };
  emit("train", "train", train_count, seen_organs);
  emit("same_organ_test", "st", same_organ_count, seen_organs);
  emit("different_organ_test", "dt", different_organ_count, unseen_organs);

  std::ofstream mf(fs::path(root) / "manifest.json");
  mf << manifest.dump(2) << "\n";
}

}  // namespace aenet
