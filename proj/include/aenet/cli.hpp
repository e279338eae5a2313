#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "aenet/synth.hpp"

namespace aenet::cli {

// exit-code contract: 0 success, 1 usage, 2 data error, 3 numeric failure
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SplitEntry {
  std::string id;
  std::string organ;
};

struct SplitManifest {
  std::vector<SplitEntry> train;
  std::vector<SplitEntry> same_organ_test;
  std::vector<SplitEntry> different_organ_test;

  static SplitManifest load(const std::string& path);
  void save(const std::string& path) const;
  /// Disjoint id lists; different-organ organs absent from training.
  void validate() const;
};

struct RunConfig {
  std::string dataset_root;
  std::string prepared_dir;
  std::string output_dir;
  std::string checkpoint;
  std::string stats_file;  // defaults to <prepared_dir>/stats.json
  std::string split = "same_organ_test";

  // module toggles
  bool use_cam = true;
  bool use_sam = true;
  bool use_ffb = true;
  bool use_watershed = true;

  // test-time configuration
  std::string normalization = "global";  // global | individual
  bool multiscale = true;
  bool flip = true;
  double binarize_threshold = 0.5;
  int patch = 200;
  double marker_frac = 0.5;
  double background_margin = 3.0;
  int min_component_size = 10;

  // training
  std::string preset = "toy";  // toy | full
  double lr = 0.0006;
  int epochs = 150;
  int batch_size = 32;
  int crop = 224;
  int max_steps = 0;  // 0 = run all epochs
  double poly_exponent = 0.9;
  double class_weight_cell = 1.0;
  double class_weight_bg = 1.0;

  int workers = 1;
  std::uint64_t seed = 0;
};

struct EvalConfig {
  std::string pred_dir;
  std::string gt_dir;
  std::string output_dir;
  bool macro = false;  // additionally report the macro aggregate
  double min_f1 = -1.0;
  double min_dice = -1.0;
  double min_miou = -1.0;
};

void cmd_synth(const std::string& root, const SynthConfig& cfg, int train_count, int st_count,
               int dt_count);
void cmd_prep(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg);
void cmd_infer(const RunConfig& cfg);
/// Throws NumericError when a required threshold flag is unmet.
void cmd_eval(const EvalConfig& cfg);
/// grid: "modules" (CAM/SAM/FFB/WS rows) or "testtime" (ICN/MS rows).
void cmd_ablate(const RunConfig& cfg, const std::string& grid);

}  // namespace aenet::cli
