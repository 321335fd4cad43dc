#include "thermo/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fmt/format.h>
#include <numeric>

#include "thermo/analytics.hpp"
#include "thermo/errors.hpp"

namespace thermo {

namespace {

// Index of the ground-truth frame sharing a timestamp with `t`, or npos.
std::size_t find_frame(std::span<const GroundTruthFrame> gts, double t) {
  auto it = std::lower_bound(gts.begin(), gts.end(), t - kFrameMatchTolerance,
                             [](const GroundTruthFrame& f, double v) { return f.timestamp < v; });
  if (it != gts.end() && std::abs(it->timestamp - t) <= kFrameMatchTolerance)
    return static_cast<std::size_t>(it - gts.begin());
  return static_cast<std::size_t>(-1);
}

std::vector<GroundTruthFrame> sorted_frames(std::span<const GroundTruthFrame> frames) {
  std::vector<GroundTruthFrame> out(frames.begin(), frames.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return out;
}

struct Ranked {
  std::size_t frame;  // index into sorted gts, npos when the frame has no annotation
  BoundingBox box;
  double confidence;
};

APResult class_ap(std::span<const FrameDetections> dets, std::span<const GroundTruthFrame> gts, ObjectClass cls,
                  double iou_thresh) {
  APResult res;
  res.cls = cls;

  std::vector<std::vector<BoundingBox>> truth(gts.size());
  std::vector<std::vector<bool>> claimed(gts.size());
  for (std::size_t f = 0; f < gts.size(); ++f) {
    for (const auto& d : gts[f].detections)
      if (d.cls == cls) truth[f].push_back(d.box);
    claimed[f].assign(truth[f].size(), false);
    res.ground_truths += truth[f].size();
  }

  std::vector<Ranked> ranked;
  for (const auto& frame : dets) {
    const std::size_t f = find_frame(gts, frame.timestamp);
    for (const auto& d : frame.detections)
      if (d.cls == cls) ranked.push_back({f, d.box, d.confidence});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.confidence > b.confidence; });
  res.detections = ranked.size();
  if (res.ground_truths == 0) return res;

  std::size_t tp = 0, fp = 0;
  for (const auto& r : ranked) {
    std::size_t best = static_cast<std::size_t>(-1);
    double best_iou = -1.0;
    if (r.frame != static_cast<std::size_t>(-1)) {
      for (std::size_t g = 0; g < truth[r.frame].size(); ++g) {
        if (claimed[r.frame][g]) continue;
        const double v = iou(r.box, truth[r.frame][g]);
        if (v > best_iou) {
          best_iou = v;
          best = g;
        }
      }
    }
    if (best != static_cast<std::size_t>(-1) && best_iou >= iou_thresh) {
      claimed[r.frame][best] = true;
      ++tp;
    } else {
      ++fp;
    }
    res.curve.push_back({double(tp) / double(res.ground_truths), double(tp) / double(tp + fp)});
  }
  res.ap = all_points_ap(res.curve);
  return res;
}

}  // namespace

double all_points_ap(std::span<const PRPoint> curve) {
  // Sentinels (0, 0) in front and (1, 0) behind, then a right-to-left max sweep.
  std::vector<double> rec{0.0}, prec{0.0};
  for (const auto& p : curve) {
    rec.push_back(p.recall);
    prec.push_back(p.precision);
  }
  rec.push_back(1.0);
  prec.push_back(0.0);
  for (std::size_t i = prec.size() - 1; i > 0; --i) prec[i - 1] = std::max(prec[i - 1], prec[i]);
  double ap = 0.0;
  for (std::size_t i = 1; i < rec.size(); ++i)
    if (rec[i] != rec[i - 1]) ap += (rec[i] - rec[i - 1]) * prec[i];
  return ap;
}

std::vector<APResult> average_precision(std::span<const FrameDetections> dets,
                                        std::span<const GroundTruthFrame> gts, double iou_thresh) {
  if (!(iou_thresh > 0.0 && iou_thresh < 1.0)) throw ArgumentError("average_precision: threshold must be in (0, 1)");
  const auto sorted = sorted_frames(gts);
  return {class_ap(dets, sorted, ObjectClass::Patient, iou_thresh),
          class_ap(dets, sorted, ObjectClass::Worker, iou_thresh)};
}

MapTable mean_ap(std::span<const FrameDetections> dets, std::span<const GroundTruthFrame> gts,
                 std::span<const double> thresholds) {
  if (thresholds.empty()) throw ArgumentError("mean_ap: no thresholds");
  MapTable table;
  table.thresholds.assign(thresholds.begin(), thresholds.end());
  table.classes = {ObjectClass::Patient, ObjectClass::Worker};
  for (double t : thresholds) {
    std::vector<std::optional<double>> row;
    for (const auto& r : average_precision(dets, gts, t)) row.push_back(r.ap);
    table.cells.push_back(std::move(row));
  }
  double grand = 0.0;
  std::size_t defined = 0;
  for (std::size_t c = 0; c < table.classes.size(); ++c) {
    if (!table.cells.front()[c]) {
      table.class_average.push_back(std::nullopt);
      table.warnings.push_back(fmt::format("no ground truth for class {}; excluded from mAP",
                                           to_string(table.classes[c])));
      continue;
    }
    double sum = 0.0;
    for (const auto& row : table.cells) sum += *row[c];
    const double avg = sum / double(table.cells.size());
    table.class_average.push_back(avg);
    grand += avg;
    ++defined;
  }
  if (defined > 0) table.overall = grand / double(defined);
  return table;
}

std::string map_table_csv(const MapTable& table) {
  auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("NA"); };
  std::string out = "metric";
  for (auto c : table.classes) out += fmt::format(",{}", to_string(c));
  out += ",overall\n";
  for (std::size_t t = 0; t < table.thresholds.size(); ++t) {
    out += fmt::format("mAP@{}", table.thresholds[t]);
    for (const auto& v : table.cells[t]) out += "," + cell(v);
    out += ",\n";
  }
  out += "Average";
  for (const auto& v : table.class_average) out += "," + cell(v);
  out += "," + cell(table.overall) + "\n";
  return out;
}

double counting_accuracy(std::span<const int> pred, std::span<const int> label) {
  if (pred.size() != label.size())
    throw ArgumentError(fmt::format("counting_accuracy: {} predictions vs {} labels", pred.size(), label.size()));
  if (pred.empty()) throw ArgumentError("counting_accuracy: empty series");
  std::size_t equal = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) equal += pred[i] == label[i];
  return double(equal) / double(pred.size());
}

double time_error(double predicted, double labeled) {
  if (!(predicted >= 0.0) || !(labeled >= 0.0)) throw ArgumentError("time_error: durations must be non-negative");
  return std::abs(predicted - labeled);
}

CountSeries align_counts(std::span<const FrameDetections> pred, std::span<const GroundTruthFrame> label,
                         double tau, double conf_min) {
  const auto pred_sorted = sorted_frames(pred);
  const auto label_sorted = sorted_frames(label);
  CountSeries out;
  const FrameDetections empty;
  for (const auto& lf : label_sorted) {
    const std::size_t p = find_frame(pred_sorted, lf.timestamp);
    const FrameDetections& pf = p == static_cast<std::size_t>(-1) ? empty : pred_sorted[p];
    out.timestamps.push_back(lf.timestamp);
    out.label_workers.push_back(int(count_workers(lf, 0.0)));
    out.pred_workers.push_back(int(count_workers(pf, conf_min)));
    out.label_interaction.push_back(interaction_time(std::span(&lf, 1), 1.0, tau, 0.0).per_frame[0]);
    out.pred_interaction.push_back(interaction_time(std::span(&pf, 1), 1.0, tau, conf_min).per_frame[0]);
  }
  return out;
}

std::string format_duration(double seconds) {
  if (!(seconds >= 0.0)) throw ArgumentError("format_duration: negative duration");
  const auto total = static_cast<long long>(std::llround(seconds));
  const long long h = total / 3600, m = (total % 3600) / 60, s = total % 60;
  if (h > 0) return fmt::format("{}h{:02}m{:02}s", h, m, s);
  if (m > 0) return fmt::format("{}m{:02}s", m, s);
  return fmt::format("{}s", s);
}

double parse_duration(const std::string& text) {
  if (text.empty()) throw FormatError("empty duration");
  long long total = 0;
  std::size_t i = 0;
  int last_rank = -1;  // h=0, m=1, s=2; units must appear in that order
  while (i < text.size()) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) throw FormatError("bad duration \"" + text + "\"");
    long long v = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) v = v * 10 + (text[i++] - '0');
    if (i == text.size()) throw FormatError("duration \"" + text + "\" lacks a unit");
    const char unit = text[i++];
    const int rank = unit == 'h' ? 0 : unit == 'm' ? 1 : unit == 's' ? 2 : -1;
    if (rank < 0 || rank <= last_rank) throw FormatError("bad duration unit in \"" + text + "\"");
    last_rank = rank;
    total += v * (rank == 0 ? 3600 : rank == 1 ? 60 : 1);
  }
  return double(total);
}

}  // namespace thermo
