#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thermo/detection.hpp"

namespace thermo {

// Ground truth reuses the detection schema; confidences are ignored.
using GroundTruthFrame = FrameDetections;

// Frames pair up when their timestamps differ by at most this many seconds.
inline constexpr double kFrameMatchTolerance = 1e-6;

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct APResult {
  ObjectClass cls = ObjectClass::Patient;
  std::size_t ground_truths = 0;
  std::size_t detections = 0;
  std::vector<PRPoint> curve;  // one point per ranked detection
  std::optional<double> ap;    // empty when the class has no ground truth
};

// VOC protocol: detections ranked by descending confidence (stable), each
// claims the unmatched same-class ground truth in its frame with the highest
// IoU >= iou_thresh; AP by all-points interpolation. Returns Patient then Worker.
// Throws ArgumentError unless 0 < iou_thresh < 1.
std::vector<APResult> average_precision(std::span<const FrameDetections> dets,
                                        std::span<const GroundTruthFrame> gts, double iou_thresh);

// Area under the monotone precision envelope of a PR curve.
double all_points_ap(std::span<const PRPoint> curve);

// Rows = thresholds, columns = classes, plus per-class averages across
// thresholds and their grand mean.
struct MapTable {
  std::vector<double> thresholds;
  std::vector<ObjectClass> classes;
  std::vector<std::vector<std::optional<double>>> cells;  // [threshold][class]
  std::vector<std::optional<double>> class_average;
  std::optional<double> overall;
  std::vector<std::string> warnings;
};

MapTable mean_ap(std::span<const FrameDetections> dets, std::span<const GroundTruthFrame> gts,
                 std::span<const double> thresholds);

std::string map_table_csv(const MapTable& table);

// Fraction of positions where pred == label. Throws ArgumentError on length
// mismatch or empty input.
double counting_accuracy(std::span<const int> pred, std::span<const int> label);

// |predicted - labeled|; both must be non-negative.
double time_error(double predicted, double labeled);

// Per-second worker counts and interaction indicators for prediction and label,
// on the label's timeline. Label frames without a prediction count as empty.
struct CountSeries {
  std::vector<double> timestamps;
  std::vector<int> pred_workers, label_workers;
  std::vector<int> pred_interaction, label_interaction;
};

CountSeries align_counts(std::span<const FrameDetections> pred, std::span<const GroundTruthFrame> label,
                         double tau, double conf_min);

// "1h00m21s", "57m25s", "32s": the leading unit is unpadded, later units are
// two digits. Seconds are rounded to the nearest integer.
std::string format_duration(double seconds);
// Inverse of format_duration; also accepts unpadded later units ("1m8s").
// Throws FormatError.
double parse_duration(const std::string& text);

}  // namespace thermo
