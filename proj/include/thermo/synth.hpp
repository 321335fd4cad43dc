#pragma once

// Scripted thermal scenes with exact ground truth. Actors are rectangles, so
// every box-derived quantity (worker counts, interaction seconds, displacement)
// is known without annotation.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "thermo/detection.hpp"
#include "thermo/frame_io.hpp"

namespace thermo::synth {

enum class Axis { X, Y };

// Triangle-wave oscillation 0 -> +amplitude -> 0 -> -amplitude -> 0 at `speed` px/s,
// active in [start, end]; the offset reached at `end` is held afterwards.
struct Oscillation {
  double start = 0.0;
  double end = 0.0;
  Axis axis = Axis::X;
  double amplitude = 0.0;
  double speed = 0.0;
};

struct PatientScript {
  BoundingBox box{140, 80, 100, 160};
  double temp = 36.0;
  double texture_amplitude = 1.0;  // Celsius; body-fixed pattern the flow can track
  std::vector<Oscillation> motion;
};

struct Waypoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

// Present for enter <= t < exit; top-left corner interpolated linearly between
// waypoints and held constant outside them.
struct WorkerScript {
  double enter = 0.0;
  double exit = 0.0;
  double w = 40.0;
  double h = 80.0;
  double temp = 35.0;
  std::vector<Waypoint> path;
};

struct Scenario {
  double duration = 60.0;  // frames at t = k * dt for k * dt < duration
  double dt = 1.0;
  std::size_t width = 384;
  std::size_t height = 288;
  double background_temp = 22.0;
  double noise_sigma = 0.1;
  double tau = 0.1;
  PatientScript patient;
  std::vector<WorkerScript> workers;

  std::size_t frame_count() const;
  // Throws ArgumentError when any scripted box leaves the frame or fields are invalid.
  void validate() const;
};

struct GroundTruth {
  std::vector<FrameDetections> detections;  // confidence 1.0
  std::vector<int> worker_counts;           // m_t
  std::vector<int> interaction;             // PI_t
  std::vector<std::pair<double, double>> patient_displacement;  // since previous frame
  double nursing_time = 0.0;
  double interaction_time = 0.0;
};

BoundingBox patient_box_at(const Scenario& s, double t);
std::vector<BoundingBox> worker_boxes_at(const Scenario& s, double t);

GroundTruth ground_truth(const Scenario& s);

// Frame k, bit-deterministic for a fixed (scenario, seed, k).
ThermalFrame render_frame(const Scenario& s, std::uint64_t seed, std::size_t k);

struct Rendered {
  std::vector<ThermalFrame> frames;
  GroundTruth truth;
};
Rendered render(const Scenario& s, std::uint64_t seed);

Scenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);

// The reference 300 s ward session used by the end-to-end checks.
Scenario reference_scenario();

// Writes frames/frame_NNNNN.npy (float32), manifest.json, truth.jsonl and truth.json under dir.
void write_session(const Scenario& s, std::uint64_t seed, const std::filesystem::path& dir);

}  // namespace thermo::synth
