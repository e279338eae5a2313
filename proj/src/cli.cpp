#include "aenet/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include <json.hpp>

#include "aenet/checkpoint.hpp"
#include "aenet/image_io.hpp"
#include "aenet/imaging.hpp"
#include "aenet/inference.hpp"
#include "aenet/metrics.hpp"
#include "aenet/model.hpp"
#include "aenet/watershed.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace aenet::cli {

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

json entries_to_json(const std::vector<SplitEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) arr.push_back({{"id", e.id}, {"organ", e.organ}});
  return arr;
}

std::vector<SplitEntry> entries_from_json(const json& arr) {
  std::vector<SplitEntry> out;
  for (const auto& e : arr) out.push_back({e.at("id").get<std::string>(),
                                           e.at("organ").get<std::string>()});
  return out;
}

}  // namespace

SplitManifest SplitManifest::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("manifest not found: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw DataError("manifest " + path + ": " + e.what());
  }
  SplitManifest m;
  m.train = entries_from_json(j.at("train"));
  m.same_organ_test = entries_from_json(j.at("same_organ_test"));
  m.different_organ_test = entries_from_json(j.at("different_organ_test"));
  return m;
}

void SplitManifest::save(const std::string& path) const {
  json j;
  j["train"] = entries_to_json(train);
  j["same_organ_test"] = entries_to_json(same_organ_test);
  j["different_organ_test"] = entries_to_json(different_organ_test);
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write manifest: " + path);
  os << j.dump(2) << "\n";
}

void SplitManifest::validate() const {
  std::set<std::string> seen;
  for (const auto* split : {&train, &same_organ_test, &different_organ_test})
    for (const auto& e : *split)
      if (!seen.insert(e.id).second)
        throw DataError("manifest: id appears in more than one split: " + e.id);
  std::set<std::string> train_organs;
  for (const auto& e : train) train_organs.insert(e.organ);
  for (const auto& e : different_organ_test)
    if (train_organs.count(e.organ))
      throw DataError("manifest: different-organ split contains a training organ: " + e.organ);
}

namespace {

// -------------------------------------------------------------------------
// shared plumbing

std::string find_image_path(const std::string& root, const std::string& id) {
  for (const char* ext : {".png", ".tif", ".tiff"}) {
    const fs::path p = fs::path(root) / "images" / (id + ext);
    if (fs::exists(p)) return p.string();
  }
  throw DataError("image not found for id '" + id + "' under " + root + "/images");
}

struct PoolEntry {
  std::string id;
  int orientation = 0;  // index into kOrientations
  double scale = 1.0;
};

void save_pool(const std::string& path, const std::vector<PoolEntry>& pool) {
  json arr = json::array();
  for (const auto& e : pool)
    arr.push_back({{"id", e.id}, {"orientation", e.orientation}, {"scale", e.scale}});
  std::ofstream os(path, std::ios::trunc);
  os << arr.dump() << "\n";
}

std::vector<PoolEntry> load_pool(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("augmentation pool not found: " + path);
  json arr;
  is >> arr;
  std::vector<PoolEntry> pool;
  for (const auto& e : arr)
    pool.push_back({e.at("id").get<std::string>(), e.at("orientation").get<int>(),
                    e.at("scale").get<double>()});
  return pool;
}

AENetConfig net_config_for(const RunConfig& cfg) {
  AENetConfig nc = cfg.preset == "full" ? AENetConfig::full() : AENetConfig::toy();
  if (cfg.preset != "full" && cfg.preset != "toy")
    throw UsageError("unknown preset: " + cfg.preset);
  nc.use_cam = cfg.use_cam;
  nc.use_sam = cfg.use_sam;
  nc.use_ffb = cfg.use_ffb;
  return nc;
}

EnsembleConfig ensemble_for(const RunConfig& cfg) {
  EnsembleConfig ec;
  if (!cfg.multiscale) ec.scales = {1.0};
  ec.flip = cfg.flip;
  ec.threshold = cfg.binarize_threshold;
  ec.patch = cfg.patch;
  return ec;
}

PostprocessConfig postprocess_for(const RunConfig& cfg) {
  PostprocessConfig pc;
  pc.binarize_threshold = cfg.binarize_threshold;
  pc.markers.threshold_frac = cfg.marker_frac;
  pc.markers.background_margin = cfg.background_margin;
  pc.min_component_size = cfg.min_component_size;
  return pc;
}

std::string source_root_of(const RunConfig& cfg) {
  if (!cfg.dataset_root.empty()) return cfg.dataset_root;
  std::ifstream is(fs::path(cfg.prepared_dir) / "prep_meta.json");
  if (!is) throw DataError("prepared directory missing prep_meta.json: " + cfg.prepared_dir);
  json j;
  is >> j;
  return j.at("source_root").get<std::string>();
}

const std::vector<SplitEntry>& select_split(const SplitManifest& m, const std::string& name) {
  if (name == "train") return m.train;
  if (name == "same_organ_test" || name == "st") return m.same_organ_test;
  if (name == "different_organ_test" || name == "dt") return m.different_organ_test;
  throw UsageError("unknown split: " + name);
}

Mask load_gt_mask(const std::string& prepared_dir, const std::string& id) {
  const fs::path p = fs::path(prepared_dir) / "masks" / (id + ".png");
  if (!fs::exists(p)) throw DataError("rasterized mask missing: " + p.string());
  return read_mask_png(p.string());
}

// quick single-scale forward used for validation during training
double validation_dice(AENet<float>& net, const std::vector<SplitEntry>& entries,
                       const std::string& source_root, const std::string& prepared_dir,
                       const NormalizationStats& stats, double threshold) {
  if (entries.empty()) return -1.0;
  ModelFn fn = with_padding_to_multiple(
      [&net](const Tensor<float>& img) { return net.forward_prob(img); }, kOutputStride);
  ConfusionCounts total;
  for (const auto& e : entries) {
    const ImageU8 img = read_image(find_image_path(source_root, e.id));
    const Tensor<float> prob = fn(normalize_global(img, stats));
    total += confusion(binarize(prob, threshold), load_gt_mask(prepared_dir, e.id));
  }
  return scores(total).dice;
}

}  // namespace

void cmd_synth(const std::string& root, const SynthConfig& cfg, int train_count, int st_count,
               int dt_count) {
  if (train_count < 1 || st_count < 0 || dt_count < 0)
    throw UsageError("synth: counts must be positive");
  write_synth_dataset(root, cfg, train_count, st_count, dt_count);
  std::cout << "synth: wrote " << (train_count + st_count + dt_count) << " images under "
            << root << "\n";
}

void cmd_prep(const RunConfig& cfg) {
  if (cfg.dataset_root.empty() || cfg.prepared_dir.empty())
    throw UsageError("prep: --dataset-root and --prepared-dir are required");
  SplitManifest manifest = SplitManifest::load(
      (fs::path(cfg.dataset_root) / "manifest.json").string());
  manifest.validate();

  fs::create_directories(fs::path(cfg.prepared_dir) / "masks");

  std::vector<SplitEntry> all;
  for (const auto* split : {&manifest.train, &manifest.same_organ_test,
                            &manifest.different_organ_test})
    all.insert(all.end(), split->begin(), split->end());

  // every image needs its annotation; missing ones are a hard error
  std::vector<std::string> missing;
  for (const auto& e : all) {
    const fs::path ann = fs::path(cfg.dataset_root) / "annotations" / (e.id + ".xml");
    if (!fs::exists(ann)) missing.push_back(ann.string());
  }
  if (!missing.empty()) {
    std::string msg = "prep: missing annotations:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw DataError(msg);
  }

  std::vector<ImageU8> train_images;
  for (const auto& e : all) {
    const ImageU8 img = read_image(find_image_path(cfg.dataset_root, e.id));
    const fs::path ann = fs::path(cfg.dataset_root) / "annotations" / (e.id + ".xml");
    std::ifstream is(ann);
    std::string xml((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    const AnnotationSet annotations = parse_annotations(xml);
    const Mask mask = rasterize(annotations, img.h, img.w);
    write_mask_png((fs::path(cfg.prepared_dir) / "masks" / (e.id + ".png")).string(), mask);
    const bool is_train = std::any_of(manifest.train.begin(), manifest.train.end(),
                                      [&](const SplitEntry& t) { return t.id == e.id; });
    if (is_train) train_images.push_back(img);
  }

  // augmentation pool: orientations then zoom scales, entries only
  std::vector<PoolEntry> pool;
  int stage1 = 0;
  for (const auto& e : manifest.train)
    for (std::size_t o = 0; o < kOrientations.size(); ++o) {
      ++stage1;
      for (double s : kZoomScales) pool.push_back({e.id, static_cast<int>(o), s});
    }
  save_pool((fs::path(cfg.prepared_dir) / "pool.json").string(), pool);

  const NormalizationStats stats = compute_stats(train_images);
  save_stats((fs::path(cfg.prepared_dir) / "stats.json").string(), stats);
  manifest.save((fs::path(cfg.prepared_dir) / "manifest.json").string());

  json meta;
  meta["source_root"] = cfg.dataset_root;
  meta["stage1_entries"] = stage1;
  meta["pool_entries"] = pool.size();
  std::ofstream os(fs::path(cfg.prepared_dir) / "prep_meta.json");
  os << meta.dump(2) << "\n";

  std::cout << "prep: " << manifest.train.size() << " training images -> " << stage1
            << " oriented variants -> " << pool.size() << " pool entries\n";
}

void cmd_train(const RunConfig& cfg) {
  if (cfg.prepared_dir.empty() || cfg.output_dir.empty())
    throw UsageError("train: --prepared-dir and --output-dir are required");
  const std::string source_root = source_root_of(cfg);
  SplitManifest manifest =
      SplitManifest::load((fs::path(cfg.prepared_dir) / "manifest.json").string());
  const NormalizationStats stats =
      load_stats((fs::path(cfg.prepared_dir) / "stats.json").string());
  const std::vector<PoolEntry> pool =
      load_pool((fs::path(cfg.prepared_dir) / "pool.json").string());
  if (pool.empty()) throw DataError("train: empty augmentation pool");

  fs::create_directories(cfg.output_dir);

  // originals stay resident; augmented variants are realised per draw
  std::map<std::string, SamplePair> originals;
  for (const auto& e : manifest.train) {
    SamplePair s;
    s.image = read_image(find_image_path(source_root, e.id));
    s.mask = load_gt_mask(cfg.prepared_dir, e.id);
    originals.emplace(e.id, std::move(s));
  }

  TrainConfig tc;
  tc.initial_lr = cfg.lr;
  tc.max_epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.poly_exponent = cfg.poly_exponent;
  tc.class_weight_cell = cfg.class_weight_cell;
  tc.class_weight_bg = cfg.class_weight_bg;

  AENet<float> net(net_config_for(cfg));
  Adam<float> opt;
  std::uint64_t step = 0;
  if (!cfg.checkpoint.empty()) {
    step = load_checkpoint(cfg.checkpoint, net, opt).global_step;
  } else {
    net.init(cfg.seed);
    opt.init(net.params());
  }
  auto params = net.params();

  const long long steps_per_epoch =
      (static_cast<long long>(pool.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const long long total_iters = steps_per_epoch * cfg.epochs;
  long long end_step = total_iters;
  if (cfg.max_steps > 0) end_step = std::min<long long>(end_step, cfg.max_steps);

  std::ofstream log(fs::path(cfg.output_dir) / "train_log.csv", std::ios::trunc);
  log << "epoch,step,lr,mean_loss,val_dice\n";

  double best_dice = -2.0;
  double epoch_loss = 0.0;
  long long epoch_steps = 0;
  int epoch = 0;
  for (; static_cast<long long>(step) < end_step; ++step) {
    epoch = static_cast<int>(static_cast<long long>(step) / steps_per_epoch);
    const double lr = lr_schedule(epoch, static_cast<long long>(step), total_iters, tc);
    std::mt19937_64 rng(mix_seed(cfg.seed, "train_step_" + std::to_string(step)));
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<std::pair<Tensor<float>, Mask>> batch;
    batch.reserve(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) {
      const PoolEntry& entry = pool[pick(rng)];
      const SamplePair& base = originals.at(entry.id);
      SamplePair variant{apply_orientation(base.image, kOrientations[entry.orientation]),
                         apply_orientation(base.mask, kOrientations[entry.orientation])};
      if (entry.scale != 1.0) {
        variant.image = zoom_image(variant.image, entry.scale);
        variant.mask = zoom_mask(variant.mask, entry.scale);
      }
      SamplePair crop = random_crop(variant, cfg.crop, rng);
      batch.emplace_back(normalize_global(crop.image, stats), std::move(crop.mask));
    }
    float loss;
    try {
      loss = train_step(net, opt, params, batch, lr, tc);
    } catch (const std::runtime_error& e) {
      throw NumericError("train: step " + std::to_string(step) + ": " + e.what());
    }
    epoch_loss += loss;
    ++epoch_steps;

    const bool epoch_end = (static_cast<long long>(step) + 1) % steps_per_epoch == 0;
    if (epoch_end) {
      const double dice = validation_dice(net, manifest.same_organ_test, source_root,
                                          cfg.prepared_dir, stats, cfg.binarize_threshold);
      const double lr_logged = lr_schedule(epoch, static_cast<long long>(step), total_iters, tc);
      log << epoch << "," << (step + 1) << "," << fmt(lr_logged, "%.10g") << ","
          << fmt(epoch_loss / epoch_steps) << "," << fmt(dice) << "\n";
      epoch_loss = 0.0;
      epoch_steps = 0;
      char name[48];
      std::snprintf(name, sizeof(name), "ckpt_epoch_%04d.bin", epoch);
      save_checkpoint((fs::path(cfg.output_dir) / name).string(), net, opt, epoch, step + 1);
      if (dice > best_dice) {
        best_dice = dice;
        save_checkpoint((fs::path(cfg.output_dir) / "ckpt_best.bin").string(), net, opt,
                        epoch, step + 1);
      }
    }
  }
  save_checkpoint((fs::path(cfg.output_dir) / "ckpt_last.bin").string(), net, opt, epoch,
                  step);
  std::cout << "train: finished at step " << step << ", best validation dice "
            << fmt(best_dice) << "\n";
}

namespace {

void write_prob_png(const std::string& path, const Tensor<float>& prob) {
  const int h = prob.dim(1), w = prob.dim(2);
  std::vector<std::uint16_t> px(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < px.size(); ++i)
    px[i] = static_cast<std::uint16_t>(
        std::lround(std::clamp(prob.values[i], 0.0f, 1.0f) * 65535.0f));
  write_png_gray16(path, px, h, w);
}

void write_overlay_png(const std::string& path, const ImageU8& image,
                       const LabeledMask& labels) {
  ImageU8 overlay = image;
  for (int y = 0; y < labels.h; ++y)
    for (int x = 0; x < labels.w; ++x) {
      if (labels.at(y, x) != 0) continue;
      bool boundary = false;
      const int dyx[4][2] = {{-1, 0}, {0, -1}, {0, 1}, {1, 0}};
      for (const auto& d : dyx) {
        const int ny = y + d[0], nx = x + d[1];
        if (ny >= 0 && ny < labels.h && nx >= 0 && nx < labels.w && labels.at(ny, nx) > 0)
          boundary = true;
      }
      if (boundary) {
        overlay.at(y, x, 0) = 255;
        overlay.at(y, x, 1) = 40;
        overlay.at(y, x, 2) = 40;
      }
    }
  write_png_rgb8(path, overlay);
}

}  // namespace

void cmd_infer(const RunConfig& cfg) {
  if (cfg.prepared_dir.empty() || cfg.output_dir.empty() || cfg.checkpoint.empty())
    throw UsageError("infer: --prepared-dir, --output-dir and --checkpoint are required");
  if (cfg.normalization != "global" && cfg.normalization != "individual")
    throw UsageError("infer: normalization must be 'global' or 'individual'");
  const std::string source_root = source_root_of(cfg);
  SplitManifest manifest =
      SplitManifest::load((fs::path(cfg.prepared_dir) / "manifest.json").string());
  const std::vector<SplitEntry>& entries = select_split(manifest, cfg.split);
  if (entries.empty()) throw DataError("infer: split '" + cfg.split + "' is empty");

  NormalizationStats stats;
  if (cfg.normalization == "global") {
    const std::string stats_path = cfg.stats_file.empty()
                                       ? (fs::path(cfg.prepared_dir) / "stats.json").string()
                                       : cfg.stats_file;
    stats = load_stats(stats_path);
  }

  AENet<float> net(AENetConfig{});
  Adam<float> opt;
  load_checkpoint(cfg.checkpoint, net, opt);

  fs::create_directories(fs::path(cfg.output_dir) / "prob");
  fs::create_directories(fs::path(cfg.output_dir) / "mask");
  if (cfg.use_watershed) {
    fs::create_directories(fs::path(cfg.output_dir) / "labels");
    fs::create_directories(fs::path(cfg.output_dir) / "overlay");
  }

  const EnsembleConfig ec = ensemble_for(cfg);
  const PostprocessConfig pc = postprocess_for(cfg);
  ModelFn fn = with_padding_to_multiple(
      [&net](const Tensor<float>& img) { return net.forward_prob(img); }, kOutputStride);

  const auto process = [&](const SplitEntry& e) {
    const ImageU8 img = read_image(find_image_path(source_root, e.id));
    if (img.h < kOutputStride || img.w < kOutputStride)
      throw DataError("infer: image sides below 16 rejected: " + e.id);
    const Tensor<float> input = cfg.normalization == "individual"
                                    ? normalize_individual(img)
                                    : normalize_global(img, stats);
    const Tensor<float> prob = multiscale_infer(input, fn, ec);
    write_prob_png((fs::path(cfg.output_dir) / "prob" / (e.id + ".png")).string(), prob);

    json sidecar;
    sidecar["scales"] = ec.scales;
    sidecar["flip"] = ec.flip;
    sidecar["patch"] = ec.patch;
    sidecar["passes"] = ec.pass_count();
    sidecar["normalization"] = cfg.normalization;
    sidecar["threshold"] = ec.threshold;
    std::ofstream sc(fs::path(cfg.output_dir) / "prob" / (e.id + ".json"));
    sc << sidecar.dump(2) << "\n";

    if (cfg.use_watershed) {
      const PostprocessResult post = postprocess(prob, pc);
      write_mask_png((fs::path(cfg.output_dir) / "mask" / (e.id + ".png")).string(),
                     post.refined);
      std::vector<std::uint16_t> label_px(post.instances.labels.size());
      for (std::size_t i = 0; i < label_px.size(); ++i)
        label_px[i] = static_cast<std::uint16_t>(
            std::min<std::int32_t>(post.instances.labels[i], 65535));
      write_png_gray16((fs::path(cfg.output_dir) / "labels" / (e.id + ".png")).string(),
                       label_px, post.instances.h, post.instances.w);
      write_overlay_png((fs::path(cfg.output_dir) / "overlay" / (e.id + ".png")).string(),
                        img, post.instances);
    } else {
      write_mask_png((fs::path(cfg.output_dir) / "mask" / (e.id + ".png")).string(),
                     binarize(prob, ec.threshold));
    }
  };

  if (cfg.workers <= 1) {
    for (const auto& e : entries) process(e);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    std::mutex err_mutex;
    std::string first_error;
    for (int t = 0; t < cfg.workers; ++t)
      threads.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= entries.size()) return;
          try {
            process(entries[i]);
          } catch (const std::exception& ex) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (first_error.empty()) first_error = ex.what();
          }
        }
      });
    for (auto& t : threads) t.join();
    if (!first_error.empty()) throw DataError(first_error);
  }

  json run;
  run["split"] = cfg.split;
  run["normalization"] = cfg.normalization;
  run["multiscale"] = cfg.multiscale;
  run["flip"] = ec.flip;
  run["watershed"] = cfg.use_watershed;
  run["passes_per_image"] = ec.pass_count();
  json imgs = json::array();
  for (const auto& e : entries) imgs.push_back({{"id", e.id}, {"passes", ec.pass_count()}});
  run["images"] = imgs;
  std::ofstream rs(fs::path(cfg.output_dir) / "run.json");
  rs << run.dump(2) << "\n";
  std::cout << "infer: " << entries.size() << " images, " << ec.pass_count()
            << " passes each\n";
}

namespace {

std::vector<std::string> png_ids(const std::string& dir) {
  std::vector<std::string> ids;
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".png") ids.push_back(entry.path().stem().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

void write_report_row(std::ostream& os, const std::string& id, const ConfusionCounts& c,
                      const MetricReport& r) {
  os << id << "," << c.tp << "," << c.tn << "," << c.fp << "," << c.fn << ","
     << fmt(r.accuracy) << "," << fmt(r.recall) << "," << fmt(r.precision) << "," << fmt(r.f1)
     << "," << fmt(r.miou) << "," << fmt(r.dice) << "," << fmt(r.dice_paper) << ","
     << (r.degenerate ? 1 : 0) << "\n";
}

}  // namespace

void cmd_eval(const EvalConfig& cfg) {
  if (cfg.pred_dir.empty() || cfg.gt_dir.empty() || cfg.output_dir.empty())
    throw UsageError("eval: --pred-dir, --gt-dir and --output-dir are required");
  const std::vector<std::string> pred_ids = png_ids(cfg.pred_dir);
  const std::vector<std::string> gt_ids = png_ids(cfg.gt_dir);
  if (pred_ids.empty()) throw UsageError("eval: no predictions in " + cfg.pred_dir);

  std::vector<std::string> only_pred, only_gt;
  std::set_difference(pred_ids.begin(), pred_ids.end(), gt_ids.begin(), gt_ids.end(),
                      std::back_inserter(only_pred));
  std::set_difference(gt_ids.begin(), gt_ids.end(), pred_ids.begin(), pred_ids.end(),
                      std::back_inserter(only_gt));
  if (!only_pred.empty() || !only_gt.empty()) {
    std::string msg = "eval: unmatched identifiers:";
    for (const auto& id : only_pred) msg += "\n  prediction without ground truth: " + id;
    for (const auto& id : only_gt) msg += "\n  ground truth without prediction: " + id;
    throw DataError(msg);
  }

  fs::create_directories(cfg.output_dir);
  std::ofstream csv(fs::path(cfg.output_dir) / "eval.csv", std::ios::trunc);
  csv << "id,tp,tn,fp,fn,accuracy,recall,precision,f1,miou,dice,dice_paper,degenerate\n";

  std::vector<ConfusionCounts> counts;
  std::vector<MetricReport> reports;
  for (const auto& id : pred_ids) {
    const Mask pred = read_mask_png((fs::path(cfg.pred_dir) / (id + ".png")).string());
    const Mask gt = read_mask_png((fs::path(cfg.gt_dir) / (id + ".png")).string());
    if (pred.h != gt.h || pred.w != gt.w)
      throw DataError("eval: size mismatch for id " + id);
    const ConfusionCounts c = confusion(pred, gt);
    counts.push_back(c);
    reports.push_back(scores(c));
    write_report_row(csv, id, c, reports.back());
  }
  const ConfusionCounts micro_counts = aggregate_micro(counts);
  const MetricReport micro = scores(micro_counts);
  write_report_row(csv, "AGGREGATE_MICRO", micro_counts, micro);
  if (cfg.macro) write_report_row(csv, "AGGREGATE_MACRO", micro_counts, aggregate_macro(reports));

  json summary;
  summary["images"] = pred_ids.size();
  summary["micro"] = {{"accuracy", micro.accuracy}, {"recall", micro.recall},
                      {"precision", micro.precision}, {"f1", micro.f1},
                      {"miou", micro.miou},          {"dice", micro.dice},
                      {"dice_paper", micro.dice_paper}};
  if (cfg.macro) {
    const MetricReport macro = aggregate_macro(reports);
    summary["macro"] = {{"accuracy", macro.accuracy}, {"recall", macro.recall},
                        {"precision", macro.precision}, {"f1", macro.f1},
                        {"miou", macro.miou},          {"dice", macro.dice},
                        {"dice_paper", macro.dice_paper}};
  }
  std::ofstream sj(fs::path(cfg.output_dir) / "summary.json");
  sj << summary.dump(2) << "\n";

  std::cout << "eval: " << pred_ids.size() << " images, micro f1 " << fmt(micro.f1)
            << " dice " << fmt(micro.dice) << " miou " << fmt(micro.miou) << "\n";
  if (cfg.min_f1 >= 0 && micro.f1 < cfg.min_f1)
    throw NumericError("eval: micro F1 " + fmt(micro.f1) + " below required " +
                       fmt(cfg.min_f1));
  if (cfg.min_dice >= 0 && micro.dice < cfg.min_dice)
    throw NumericError("eval: micro dice " + fmt(micro.dice) + " below required " +
                       fmt(cfg.min_dice));
  if (cfg.min_miou >= 0 && micro.miou < cfg.min_miou)
    throw NumericError("eval: micro mIoU " + fmt(micro.miou) + " below required " +
                       fmt(cfg.min_miou));
}

namespace {

MetricReport eval_row(const RunConfig& row_cfg) {
  SplitManifest manifest =
      SplitManifest::load((fs::path(row_cfg.prepared_dir) / "manifest.json").string());
  const auto& entries = select_split(manifest, row_cfg.split);
  std::vector<ConfusionCounts> counts;
  for (const auto& e : entries) {
    const Mask pred =
        read_mask_png((fs::path(row_cfg.output_dir) / "mask" / (e.id + ".png")).string());
    const Mask gt = load_gt_mask(row_cfg.prepared_dir, e.id);
    counts.push_back(confusion(pred, gt));
  }
  return scores(aggregate_micro(counts));
}

}  // namespace

void cmd_ablate(const RunConfig& cfg, const std::string& grid) {
  if (cfg.output_dir.empty()) throw UsageError("ablate: --output-dir is required");
  fs::create_directories(cfg.output_dir);

  struct Row {
    std::string name;
    bool cam, sam, ffb, ws, icn, ms;
  };
  std::vector<Row> rows;
  if (grid == "modules") {
    rows = {{"base", false, false, false, false, false, false},
            {"cam", true, false, false, false, false, false},
            {"cam_sam", true, true, false, false, false, false},
            {"cam_sam_ffb", true, true, true, false, false, false},
            {"cam_sam_ffb_ws", true, true, true, true, false, false}};
  } else if (grid == "testtime") {
    rows = {{"base", cfg.use_cam, cfg.use_sam, cfg.use_ffb, cfg.use_watershed, false, false},
            {"ms", cfg.use_cam, cfg.use_sam, cfg.use_ffb, cfg.use_watershed, false, true},
            {"icn", cfg.use_cam, cfg.use_sam, cfg.use_ffb, cfg.use_watershed, true, false},
            {"icn_ms", cfg.use_cam, cfg.use_sam, cfg.use_ffb, cfg.use_watershed, true, true}};
  } else {
    throw UsageError("ablate: grid must be 'modules' or 'testtime'");
  }

  // test-time rows share one trained checkpoint
  std::string shared_checkpoint = cfg.checkpoint;
  if (grid == "testtime" && shared_checkpoint.empty()) {
    RunConfig tcfg = cfg;
    tcfg.output_dir = (fs::path(cfg.output_dir) / "train").string();
    cmd_train(tcfg);
    shared_checkpoint = (fs::path(tcfg.output_dir) / "ckpt_last.bin").string();
  }

  std::ofstream csv(fs::path(cfg.output_dir) / "ablation.csv", std::ios::trunc);
  std::ofstream txt(fs::path(cfg.output_dir) / "ablation.txt", std::ios::trunc);
  if (grid == "modules") {
    csv << "row,cam,sam,ffb,ws,f1,dice,miou\n";
    txt << "CAM SAM FFB WS  |     F1   Dice   mIoU\n";
  } else {
    csv << "row,icn,ms,recall,precision,f1,dice\n";
    txt << "ICN MS  | Recall   Prec     F1   Dice\n";
  }

  for (const Row& row : rows) {
    RunConfig rc = cfg;
    rc.use_cam = row.cam;
    rc.use_sam = row.sam;
    rc.use_ffb = row.ffb;
    rc.use_watershed = row.ws;
    const fs::path row_dir = fs::path(cfg.output_dir) / "rows" / row.name;
    if (grid == "modules") {
      rc.normalization = "global";
      rc.multiscale = false;
      rc.flip = false;
      RunConfig train_cfg = rc;
      train_cfg.output_dir = (row_dir / "train").string();
      cmd_train(train_cfg);
      rc.checkpoint = (row_dir / "train" / "ckpt_last.bin").string();
    } else {
      rc.normalization = row.icn ? "individual" : "global";
      rc.multiscale = row.ms;
      rc.flip = row.ms;  // flip rides with the multi-scale evaluation
      rc.checkpoint = shared_checkpoint;
    }
    rc.output_dir = (row_dir / "infer").string();
    cmd_infer(rc);
    const MetricReport r = eval_row(rc);

    const auto tick = [](bool b) { return b ? "x" : "-"; };
    if (grid == "modules") {
      csv << row.name << "," << row.cam << "," << row.sam << "," << row.ffb << "," << row.ws
          << "," << fmt(r.f1) << "," << fmt(r.dice) << "," << fmt(r.miou) << "\n";
      txt << "  " << tick(row.cam) << "   " << tick(row.sam) << "   " << tick(row.ffb)
          << "   " << tick(row.ws) << " | " << fmt(r.f1) << " " << fmt(r.dice) << " "
          << fmt(r.miou) << "\n";
    } else {
      csv << row.name << "," << row.icn << "," << row.ms << "," << fmt(r.recall) << ","
          << fmt(r.precision) << "," << fmt(r.f1) << "," << fmt(r.dice) << "\n";
      txt << "  " << tick(row.icn) << "  " << tick(row.ms) << " | " << fmt(r.recall) << " "
          << fmt(r.precision) << " " << fmt(r.f1) << " " << fmt(r.dice) << "\n";
    }
  }
  std::cout << "ablate: wrote " << (fs::path(cfg.output_dir) / "ablation.csv").string()
            << "\n";
}

}  // namespace aenet::cli
