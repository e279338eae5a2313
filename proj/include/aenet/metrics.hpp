#pragma once

#include <cstdint>
#include <vector>

#include "aenet/image.hpp"

namespace aenet {

/// Pixel tallies with cell (label 0) as the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

struct MetricReport {
  double accuracy = 0, recall = 0, precision = 0, f1 = 0, miou = 0;
  double dice = 0;        // conventional 2TP/(2TP+FP+FN)
  double dice_paper = 0;  // 2TP/(TP+FP+FN); exceeds 1 at perfect prediction
  bool degenerate = false;  // some ratio had a zero denominator and was set to 0
};

ConfusionCounts confusion(const Mask& pred, const Mask& gt);

/// Accuracy, recall, precision, F1 (from P and R), mIoU over both classes,
/// and the two dice variants. Zero denominators yield 0 with the degenerate
/// flag set.
MetricReport scores(const ConfusionCounts& c);

/// Sum counts over a split, then score.
ConfusionCounts aggregate_micro(const std::vector<ConfusionCounts>& counts);
/// Mean of per-image reports.
MetricReport aggregate_macro(const std::vector<MetricReport>& reports);

}  // namespace aenet
