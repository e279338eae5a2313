#include "aenet/metrics.hpp"

#include <stdexcept>

namespace aenet {

ConfusionCounts confusion(const Mask& pred, const Mask& gt) {
  if (pred.h != gt.h || pred.w != gt.w)
    throw std::invalid_argument("confusion: prediction/ground-truth shape mismatch");
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  const std::size_t n = gt.size();
  const std::uint8_t* p = pred.labels.data();
  const std::uint8_t* g = gt.labels.data();
  const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static) reduction(+ : tp, tn, fp, fn)
  for (long long i = 0; i < nn; ++i) {
    const bool pc = p[i] == 0;
    const bool gc = g[i] == 0;
    tp += pc && gc;
    tn += !pc && !gc;
    fp += pc && !gc;
    fn += !pc && gc;
  }
  return {tp, tn, fp, fn};
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, bool& degenerate) {
  if (den == 0) {
    degenerate = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricReport scores(const ConfusionCounts& c) {
  if (c.total() == 0) throw std::invalid_argument("scores: no pixels evaluated");
  MetricReport r;
  r.accuracy = ratio(c.tp + c.tn, c.total(), r.degenerate);
  r.recall = ratio(c.tp, c.tp + c.fn, r.degenerate);
  r.precision = ratio(c.tp, c.tp + c.fp, r.degenerate);
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  } else {
    r.f1 = 0.0;
    r.degenerate = true;
  }
  const double iou_cell = ratio(c.tp, c.tp + c.fp + c.fn, r.degenerate);
  const double iou_bg = ratio(c.tn, c.tn + c.fn + c.fp, r.degenerate);
  r.miou = (iou_cell + iou_bg) / 2.0;
  r.dice = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, r.degenerate);
  r.dice_paper = ratio(2 * c.tp, c.tp + c.fp + c.fn, r.degenerate);
  return r;
}

ConfusionCounts aggregate_micro(const std::vector<ConfusionCounts>& counts) {
  if (counts.empty()) throw std::invalid_argument("aggregate: empty split");
  ConfusionCounts total;
  for (const auto& c : counts) total += c;
  return total;
}

MetricReport aggregate_macro(const std::vector<MetricReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate: empty split");
  MetricReport mean;
  for (const auto& r : reports) {
    mean.accuracy += r.accuracy;
    mean.recall += r.recall;
    mean.precision += r.precision;
    mean.f1 += r.f1;
    mean.miou += r.miou;
    mean.dice += r.dice;
    mean.dice_paper += r.dice_paper;
    mean.degenerate = mean.degenerate || r.degenerate;
  }
  const double n = static_cast<double>(reports.size());
  mean.accuracy /= n;
  mean.recall /= n;
  mean.precision /= n;
  mean.f1 /= n;
  mean.miou /= n;
  mean.dice /= n;
  mean.dice_paper /= n;
  return mean;
}

}  // namespace aenet
