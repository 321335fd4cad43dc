#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thermo/analytics.hpp"
#include "thermo/detection.hpp"
#include "thermo/frame_io.hpp"
#include "thermo/optical_flow.hpp"
#include "thermo/report.hpp"

namespace thermo {

// How thermal frames are mapped to 8-bit before flow.
enum class ContrastMode {
  Pair,   // auto_window of the earlier frame, applied to both frames of a flow pair
  Frame,  // auto_window per frame
  Fixed,  // [fixed_lo, fixed_hi] for every frame
};

struct AnalyzeConfig {
  double tau = kDefaultTau;
  double alpha = kDefaultAlpha;
  std::optional<double> dt;  // overrides the manifest's dt when set
  double conf_min = kDefaultConfMin;
  FlowParams flow;
  ContrastMode contrast = ContrastMode::Pair;
  double fixed_lo = 20.0;
  double fixed_hi = 40.0;
  double riker_window = kDefaultRikerWindow;
  BlobParams blob;

  // Throws ArgumentError for out-of-range settings.
  void validate() const;
};

// Supplies frame k (0-based) of a sequence with `count` frames.
struct FrameSource {
  std::size_t count = 0;
  double dt = 1.0;
  std::function<ThermalFrame(std::size_t)> load;
};

FrameSource manifest_source(const SequenceManifest& manifest);
FrameSource memory_source(std::span<const ThermalFrame> frames, double dt);

// Runs detection ingestion (or the blob detector when detections is null),
// worker counting, interaction detection and the motion recurrence over the
// whole sequence. Frames without a detection record count as empty.
SessionReport analyze_session(const FrameSource& frames, const std::vector<FrameDetections>* detections,
                              std::span<const RikerRecord> riker, const AnalyzeConfig& config);

// motion.svg (raw and relaxed motion) and workers.svg (worker count and
// interaction rows).
std::string motion_svg(const SessionReport& report);
std::string workers_svg(const SessionReport& report);

}  // namespace thermo
