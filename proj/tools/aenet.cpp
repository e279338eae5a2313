#include <CLI11.hpp>

#include <iostream>

#include "aenet/cli.hpp"
#include "aenet/kernels.hpp"

using namespace aenet;

namespace {

void add_common(CLI::App* cmd, cli::RunConfig& cfg) {
  cmd->set_config("--config");
  cmd->add_option("--seed", cfg.seed, "rng seed; fixes all stochastic behaviour");
  cmd->add_option("--workers", cfg.workers, "per-image worker threads");
}

void add_toggles(CLI::App* cmd, cli::RunConfig& cfg) {
  cmd->add_flag("--cam,!--no-cam", cfg.use_cam, "channel attention module");
  cmd->add_flag("--sam,!--no-sam", cfg.use_sam, "spatial attention module");
  cmd->add_flag("--ffb,!--no-ffb", cfg.use_ffb, "feature fusion branch");
  cmd->add_flag("--watershed,!--no-watershed", cfg.use_watershed,
                "marker-controlled watershed post-processing");
}

void add_testtime(CLI::App* cmd, cli::RunConfig& cfg) {
  cmd->add_option("--normalization", cfg.normalization, "global | individual");
  cmd->add_flag("--multiscale,!--no-multiscale", cfg.multiscale, "multi-scale ensembling");
  cmd->add_flag("--flip,!--no-flip", cfg.flip, "horizontal-flip ensembling");
  cmd->add_option("--threshold", cfg.binarize_threshold, "binarization threshold");
  cmd->add_option("--patch", cfg.patch, "inference patch side");
  cmd->add_option("--marker-frac", cfg.marker_frac, "marker threshold fraction");
  cmd->add_option("--background-margin", cfg.background_margin,
                  "sure-background margin (pixels)");
  cmd->add_option("--min-component", cfg.min_component_size,
                  "minimum component size kept before the watershed");
  cmd->add_option("--split", cfg.split, "train | same_organ_test | different_organ_test");
}

void add_train_opts(CLI::App* cmd, cli::RunConfig& cfg) {
  cmd->add_option("--preset", cfg.preset, "toy | full");
  cmd->add_option("--lr", cfg.lr, "initial learning rate");
  cmd->add_option("--epochs", cfg.epochs, "maximum epochs");
  cmd->add_option("--batch-size", cfg.batch_size, "batch size");
  cmd->add_option("--crop", cfg.crop, "training crop side");
  cmd->add_option("--max-steps", cfg.max_steps, "stop after this many optimizer steps");
  cmd->add_option("--poly-exponent", cfg.poly_exponent, "poly schedule exponent");
  cmd->add_option("--class-weight-cell", cfg.class_weight_cell, "loss weight, cell class");
  cmd->add_option("--class-weight-bg", cfg.class_weight_bg, "loss weight, background class");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AENet cell-segmentation pipeline"};
  app.require_subcommand(1);

  bool serial = false;
  app.add_flag("--serial", serial, "use the serial reference kernels");

  cli::RunConfig cfg;
  SynthConfig synth_cfg;
  cli::EvalConfig eval_cfg;
  std::string synth_root, ablate_grid = "modules";
  int synth_train = 16, synth_st = 8, synth_dt = 6;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic blob dataset");
  synth->add_option("--out", synth_root, "dataset root to create")->required();
  synth->add_option("--train", synth_train, "training image count");
  synth->add_option("--st", synth_st, "same-organ test image count");
  synth->add_option("--dt", synth_dt, "different-organ test image count");
  synth->add_option("--side", synth_cfg.side, "image side length");
  synth->add_option("--min-blobs", synth_cfg.min_blobs, "minimum nuclei per image");
  synth->add_option("--max-blobs", synth_cfg.max_blobs, "maximum nuclei per image");
  synth->add_option("--noise", synth_cfg.noise, "pixel noise stddev");
  synth->add_option("--seed", synth_cfg.seed, "rng seed");

  CLI::App* prep = app.add_subcommand("prep", "rasterize masks, build the augmentation pool");
  prep->add_option("--dataset-root", cfg.dataset_root)->required();
  prep->add_option("--prepared-dir", cfg.prepared_dir)->required();
  add_common(prep, cfg);

  CLI::App* train = app.add_subcommand("train", "train a model on a prepared dataset");
  train->add_option("--prepared-dir", cfg.prepared_dir)->required();
  train->add_option("--output-dir", cfg.output_dir)->required();
  train->add_option("--dataset-root", cfg.dataset_root, "override recorded image root");
  train->add_option("--checkpoint", cfg.checkpoint, "resume from this checkpoint");
  add_common(train, cfg);
  add_toggles(train, cfg);
  add_train_opts(train, cfg);
  train->add_option("--threshold", cfg.binarize_threshold, "validation binarization threshold");

  CLI::App* infer = app.add_subcommand("infer", "run ensemble inference");
  infer->add_option("--prepared-dir", cfg.prepared_dir)->required();
  infer->add_option("--output-dir", cfg.output_dir)->required();
  infer->add_option("--checkpoint", cfg.checkpoint)->required();
  infer->add_option("--dataset-root", cfg.dataset_root, "override recorded image root");
  infer->add_option("--stats", cfg.stats_file, "normalization stats file");
  add_common(infer, cfg);
  add_toggles(infer, cfg);
  add_testtime(infer, cfg);

  CLI::App* eval = app.add_subcommand("eval", "score predicted masks against ground truth");
  eval->add_option("--pred-dir", eval_cfg.pred_dir)->required();
  eval->add_option("--gt-dir", eval_cfg.gt_dir)->required();
  eval->add_option("--output-dir", eval_cfg.output_dir)->required();
  eval->add_flag("--macro", eval_cfg.macro, "also report the macro aggregate");
  eval->add_option("--min-f1", eval_cfg.min_f1, "fail unless micro F1 reaches this");
  eval->add_option("--min-dice", eval_cfg.min_dice, "fail unless micro dice reaches this");
  eval->add_option("--min-miou", eval_cfg.min_miou, "fail unless micro mIoU reaches this");

  CLI::App* ablate = app.add_subcommand("ablate", "toggle-grid sweeps");
  ablate->add_option("--grid", ablate_grid, "modules | testtime");
  ablate->add_option("--prepared-dir", cfg.prepared_dir)->required();
  ablate->add_option("--output-dir", cfg.output_dir)->required();
  ablate->add_option("--dataset-root", cfg.dataset_root, "override recorded image root");
  ablate->add_option("--checkpoint", cfg.checkpoint, "shared checkpoint for testtime grid");
  add_common(ablate, cfg);
  add_toggles(ablate, cfg);
  add_testtime(ablate, cfg);
  add_train_opts(ablate, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  kernels::set_parallel(!serial);

  try {
    if (synth->parsed()) cli::cmd_synth(synth_root, synth_cfg, synth_train, synth_st, synth_dt);
    if (prep->parsed()) cli::cmd_prep(cfg);
    if (train->parsed()) cli::cmd_train(cfg);
    if (infer->parsed()) cli::cmd_infer(cfg);
    if (eval->parsed()) cli::cmd_eval(eval_cfg);
    if (ablate->parsed()) cli::cmd_ablate(cfg, ablate_grid);
  } catch (const cli::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitUsage;
  } catch (const cli::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitData;
  }
  return cli::kExitOk;
}
