#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <vector>

#include "thermo/detection.hpp"
#include "thermo/optical_flow.hpp"

namespace thermo {

inline constexpr double kDefaultTau = 0.1;
inline constexpr double kDefaultAlpha = 0.7;
inline constexpr double kDefaultDt = 1.0;
inline constexpr double kDefaultConfMin = 0.5;
inline constexpr double kDefaultRikerWindow = 300.0;

// Worker detections with confidence >= conf_min.
std::size_t count_workers(const FrameDetections& frame, double conf_min);

// sum over frames of count_workers * dt. Throws ArgumentError unless dt > 0.
double nursing_time(std::span<const FrameDetections> series, double dt, double conf_min);

struct InteractionTest {
  bool indicator = false;
  double ratio = 0.0;  // overlap area / patient area
};

// indicator = overlap / area(patient) >= tau (inclusive).
InteractionTest physical_interaction(const BoundingBox& patient, const BoundingBox& worker, double tau);

struct InteractionEvent {
  double timestamp = 0.0;
  BoundingBox patient_box;
  BoundingBox worker_box;
  double overlap_ratio = 0.0;
};

// Highest-confidence Patient with confidence >= conf_min (first wins ties).
std::optional<Detection> select_patient(const FrameDetections& frame, double conf_min);
std::vector<BoundingBox> worker_boxes(const FrameDetections& frame, double conf_min);

struct InteractionSummary {
  double seconds = 0.0;
  std::vector<InteractionEvent> events;
  std::vector<int> per_frame;       // 0/1 per input frame
  std::vector<double> patient_gaps;  // timestamps of frames without a patient
};

// A frame adds dt when at least one worker satisfies the interaction test
// against the selected patient; every satisfying pair is recorded as an event.
InteractionSummary interaction_time(std::span<const FrameDetections> series, double dt, double tau,
                                    double conf_min);

struct MotionSample {
  double timestamp = 0.0;
  double raw = 0.0;       // mean + std of masked flow magnitude in the patient box
  double smoothed = 0.0;  // relaxed motion score
  bool skipped = false;   // no usable patient box; smoothed carries the previous value
};

// alpha * raw + (1 - alpha) * prev.
double relax_motion(double prev, double raw, double alpha);

// Masks worker overlap inside the patient box, takes mean + std of the flow
// magnitude over the patient box, then relaxes against prev_motion.
// Throws ArgumentError unless 0 < alpha <= 1.
MotionSample motion_step(double prev_motion, const FlowField& flow, const BoundingBox& patient,
                         std::span<const BoundingBox> workers, double alpha, double timestamp = 0.0);

struct RikerRecord {
  double timestamp = 0.0;
  int score = 0;  // 1..7
};

// Header "t,score" then one record per line. Throws FormatError with the line number.
std::vector<RikerRecord> parse_riker_csv(std::istream& in);
std::vector<RikerRecord> load_riker_csv(const std::filesystem::path& path);

struct RikerGroup {
  int score = 0;
  std::size_t records = 0;
  double mean = 0.0;  // mean of the per-record window means
  double q25 = 0.0, q50 = 0.0, q75 = 0.0;
};

struct RikerAlignment {
  std::vector<RikerGroup> groups;      // ascending score
  std::vector<RikerRecord> excluded;   // records with no motion sample in their window
};

// For every record, averages the smoothed motion of non-skipped samples with
// t in [record.t - window, record.t + window]; groups the averages by score.
RikerAlignment align_riker(std::span<const MotionSample> motion, std::span<const RikerRecord> records,
                           double window);

}  // namespace thermo
