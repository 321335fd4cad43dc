#include "thermo/pipeline.hpp"

#include <cmath>

#include "thermo/errors.hpp"
#include "thermo/svg.hpp"

namespace thermo {

void AnalyzeConfig::validate() const {
  if (!(tau > 0.0)) throw ArgumentError("tau must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must be in (0, 1]");
  if (dt && !(*dt > 0.0)) throw ArgumentError("dt must be positive");
  if (!(conf_min >= 0.0 && conf_min <= 1.0)) throw ArgumentError("conf-min must be in [0, 1]");
  if (!(riker_window > 0.0)) throw ArgumentError("riker window must be positive");
  if (contrast == ContrastMode::Fixed && !(fixed_lo < fixed_hi)) throw ArgumentError("contrast window needs lo < hi");
  if (!(blob.min_area >= 1.0)) throw ArgumentError("blob min area must be >= 1");
  flow.validate();
}

FrameSource manifest_source(const SequenceManifest& manifest) {
  return {manifest.frames.size(), manifest.dt, [manifest](std::size_t k) {
            const auto& entry = manifest.frames.at(k);
            auto frame = load_npy_frame(entry.path, entry.t);
            if (manifest.width != 0 && (frame.width != manifest.width || frame.height != manifest.height))
              throw FormatError("frame " + entry.path.string() + " does not match the manifest resolution");
            return frame;
          }};
}

FrameSource memory_source(std::span<const ThermalFrame> frames, double dt) {
  return {frames.size(), dt, [frames](std::size_t k) { return frames[k]; }};
}

namespace {

// Detection record closest to t within half a frame interval, or null.
const FrameDetections* match_detections(const std::vector<FrameDetections>& dets, double t, double dt,
                                        std::vector<bool>& used) {
  auto it = std::lower_bound(dets.begin(), dets.end(), t - 0.5 * dt,
                             [](const FrameDetections& f, double v) { return f.timestamp < v; });
  const FrameDetections* best = nullptr;
  double best_gap = 0.5 * dt;
  for (; it != dets.end() && it->timestamp <= t + 0.5 * dt; ++it) {
    const double gap = std::abs(it->timestamp - t);
    if (gap < best_gap || (!best && gap <= best_gap)) {
      best = &*it;
      best_gap = gap;
    }
  }
  if (best) used[static_cast<std::size_t>(best - dets.data())] = true;
  return best;
}

std::pair<double, double> contrast_window(const AnalyzeConfig& cfg, const ThermalFrame& frame) {
  if (cfg.contrast == ContrastMode::Fixed) return {cfg.fixed_lo, cfg.fixed_hi};
  return auto_window(frame);
}

}  // namespace

SessionReport analyze_session(const FrameSource& frames, const std::vector<FrameDetections>* detections,
                              std::span<const RikerRecord> riker, const AnalyzeConfig& config) {
  config.validate();
  SessionReport report;
  report.dt = config.dt.value_or(frames.dt);
  const double dt = report.dt;

  std::vector<FrameDetections> sorted;
  if (detections) {
    sorted = *detections;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  }
  std::vector<bool> used(sorted.size(), false);

  ThermalFrame prev;
  double motion = 0.0;  // motion_0
  std::size_t worker_frames = 0, interaction_frames = 0;
  for (std::size_t k = 0; k < frames.count; ++k) {
    ThermalFrame frame = frames.load(k);
    validate_for_flow(frame);
    if (k > 0 && (frame.width != prev.width || frame.height != prev.height))
      throw FormatError("frame " + std::to_string(k) + " changes resolution");
    const Resolution res{frame.width, frame.height};
    const double t = frame.timestamp;

    FrameDetections dets{t, {}};
    if (!detections) {
      dets.detections = blob_detect(frame, config.blob);
    } else if (const auto* m = match_detections(sorted, t, dt, used)) {
      for (auto d : m->detections)
        if (auto clamped = clamp_to(d.box, res)) {
          d.box = *clamped;
          dets.detections.push_back(d);
        }
    }

    const auto workers_here = count_workers(dets, config.conf_min);
    const auto inter = interaction_time(std::span(&dets, 1), dt, config.tau, config.conf_min);
    worker_frames += workers_here;
    interaction_frames += std::size_t(inter.per_frame[0]);
    report.worker_counts.push_back({t, int(workers_here), inter.per_frame[0]});
    report.events.insert(report.events.end(), inter.events.begin(), inter.events.end());

    const auto patient = select_patient(dets, config.conf_min);
    if (!patient) report.gaps.push_back(t);

    MotionSample sample{t, 0.0, motion, true};
    if (k > 0 && patient) {
      const auto [lo, hi] = contrast_window(config, config.contrast == ContrastMode::Pair ? prev : frame);
      const auto [plo, phi] = config.contrast == ContrastMode::Frame ? auto_window(prev) : std::pair{lo, hi};
      const auto flow = estimate_flow(normalize_to_gray(prev, plo, phi), normalize_to_gray(frame, lo, hi), config.flow);
      const auto workers = worker_boxes(dets, config.conf_min);
      sample = motion_step(motion, flow, patient->box, workers, config.alpha, t);
    }
    motion = sample.smoothed;
    report.motion.push_back(sample);
    prev = std::move(frame);
  }

  report.nursing_time = double(worker_frames) * dt;
  report.interaction_time = double(interaction_frames) * dt;
  report.unmatched_detection_frames = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  if (!riker.empty()) report.riker = align_riker(report.motion, riker, config.riker_window);
  return report;
}

std::string motion_svg(const SessionReport& report) {
  svg::Series raw{"raw (mean + std)", "#9aa7b8", {}, {}, false};
  svg::Series smooth{"relaxed motion", "#c0392b", {}, {}, false};
  for (const auto& m : report.motion) {
    raw.x.push_back(m.timestamp);
    raw.y.push_back(m.raw);
    smooth.x.push_back(m.timestamp);
    smooth.y.push_back(m.smoothed);
  }
  return svg::plot({{"Patient motion over time", "motion (px)", {raw, smooth}}}, "time (s)");
}

std::string workers_svg(const SessionReport& report) {
  svg::Series workers{"workers", "#2c7fb8", {}, {}, true};
  svg::Series inter{"physical interaction", "#d95f0e", {}, {}, true};
  for (const auto& w : report.worker_counts) {
    workers.x.push_back(w.timestamp);
    workers.y.push_back(w.workers);
    inter.x.push_back(w.timestamp);
    inter.y.push_back(w.interaction);
  }
  return svg::plot({{"Number of workers", "count", {workers}}, {"Number of physical interactions", "count", {inter}}},
                   "time (s)");
}

}  // namespace thermo
