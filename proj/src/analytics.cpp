#include "thermo/analytics.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "thermo/errors.hpp"
#include "thermo/stats.hpp"

namespace thermo {

std::size_t count_workers(const FrameDetections& frame, double conf_min) {
  return static_cast<std::size_t>(std::count_if(frame.detections.begin(), frame.detections.end(), [&](const Detection& d) {
    return d.cls == ObjectClass::Worker && d.confidence >= conf_min;
  }));
}

double nursing_time(std::span<const FrameDetections> series, double dt, double conf_min) {
  if (!(dt > 0.0)) throw ArgumentError("nursing_time: dt must be positive");
  std::size_t worker_frames = 0;
  for (const auto& f : series) worker_frames += count_workers(f, conf_min);
  return double(worker_frames) * dt;
}

InteractionTest physical_interaction(const BoundingBox& patient, const BoundingBox& worker, double tau) {
  if (!(tau > 0.0)) throw ArgumentError("physical_interaction: tau must be positive");
  const double pa = area(patient);
  if (!(pa > 0.0)) return {};
  const double ratio = intersection_area(patient, worker) / pa;
  return {ratio >= tau, ratio};
}

std::optional<Detection> select_patient(const FrameDetections& frame, double conf_min) {
  std::optional<Detection> best;
  for (const auto& d : frame.detections) {
    if (d.cls != ObjectClass::Patient || d.confidence < conf_min) continue;
    if (!best || d.confidence > best->confidence) best = d;
  }
  return best;
}

std::vector<BoundingBox> worker_boxes(const FrameDetections& frame, double conf_min) {
  std::vector<BoundingBox> out;
  for (const auto& d : frame.detections)
    if (d.cls == ObjectClass::Worker && d.confidence >= conf_min) out.push_back(d.box);
  return out;
}

InteractionSummary interaction_time(std::span<const FrameDetections> series, double dt, double tau,
                                    double conf_min) {
  if (!(dt > 0.0)) throw ArgumentError("interaction_time: dt must be positive");
  InteractionSummary out;
  out.per_frame.reserve(series.size());
  std::size_t active = 0;
  for (const auto& frame : series) {
    const auto patient = select_patient(frame, conf_min);
    if (!patient) {
      out.per_frame.push_back(0);
      out.patient_gaps.push_back(frame.timestamp);
      continue;
    }
    int pi = 0;
    for (const auto& worker : worker_boxes(frame, conf_min)) {
      const auto test = physical_interaction(patient->box, worker, tau);
      if (!test.indicator) continue;
      pi = 1;
      out.events.push_back({frame.timestamp, patient->box, worker, test.ratio});
    }
    out.per_frame.push_back(pi);
    active += std::size_t(pi);
  }
  out.seconds = double(active) * dt;
  return out;
}

double relax_motion(double prev, double raw, double alpha) { return alpha * raw + (1.0 - alpha) * prev; }

MotionSample motion_step(double prev_motion, const FlowField& flow, const BoundingBox& patient,
                         std::span<const BoundingBox> workers, double alpha, double timestamp) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ArgumentError("motion_step: alpha must be in (0, 1]");
  MotionSample sample{timestamp, 0.0, prev_motion, true};
  const auto clamped = clamp_to(patient, flow.resolution());
  if (!clamped || pixel_span(*clamped, flow.resolution()).empty()) return sample;

  const auto masked = mask_worker_regions(flow, *clamped, workers);
  const auto region = box_mask(flow.resolution(), *clamped);
  const auto stats = magnitude_stats(masked, std::span<const std::uint8_t>(region));
  sample.raw = stats.mean + stats.std;
  sample.smoothed = relax_motion(prev_motion, sample.raw, alpha);
  sample.skipped = false;
  return sample;
}

std::vector<RikerRecord> parse_riker_csv(std::istream& in) {
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::vector<RikerRecord> out;
  std::string text;
  std::size_t line = 0;
  bool header = false;
  while (std::getline(in, text)) {
    ++line;
    text = trim(text);
    if (text.empty()) continue;
    if (!header) {
      std::string compact;
      for (char c : text)
        if (c != ' ' && c != '\t') compact.push_back(c);
      if (compact != "t,score") throw FormatError("Riker CSV header must be \"t,score\"", line);
      header = true;
      continue;
    }
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw FormatError("Riker row needs two fields", line);
    RikerRecord r;
    try {
      std::size_t used = 0;
      const auto ts = trim(text.substr(0, comma));
      r.timestamp = std::stod(ts, &used);
      if (used != ts.size()) throw std::invalid_argument("t");
      const auto ss = trim(text.substr(comma + 1));
      r.score = std::stoi(ss, &used);
      if (used != ss.size()) throw std::invalid_argument("score");
    } catch (const std::exception&) {
      throw FormatError("Riker row is not \"<seconds>,<integer score>\"", line);
    }
    if (r.score < 1 || r.score > 7) throw FormatError("Riker score outside 1..7", line);
    if (!(r.timestamp >= 0.0)) throw FormatError("Riker timestamp must be non-negative", line);
    out.push_back(r);
  }
  if (!header) throw FormatError("Riker CSV is empty (missing header)");
  return out;
}

std::vector<RikerRecord> load_riker_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_riker_csv(in);
}

RikerAlignment align_riker(std::span<const MotionSample> motion, std::span<const RikerRecord> records,
                           double window) {
  if (!(window > 0.0)) throw ArgumentError("align_riker: window must be positive");
  std::map<int, std::vector<double>> by_score;
  RikerAlignment out;
  for (const auto& rec : records) {
    if (rec.score < 1 || rec.score > 7) throw ArgumentError("align_riker: score outside 1..7");
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : motion) {
      if (s.skipped || s.timestamp < rec.timestamp - window || s.timestamp > rec.timestamp + window) continue;
      sum += s.smoothed;
      ++n;
    }
    if (n == 0) {
      out.excluded.push_back(rec);
      continue;
    }
    by_score[rec.score].push_back(sum / double(n));
  }
  for (auto& [score, means] : by_score) {
    RikerGroup g;
    g.score = score;
    g.records = means.size();
    double sum = 0.0;
    for (double m : means) sum += m;
    g.mean = sum / double(means.size());
    std::sort(means.begin(), means.end());
    g.q25 = percentile_sorted(means, 25.0);
    g.q50 = percentile_sorted(means, 50.0);
    g.q75 = percentile_sorted(means, 75.0);
    out.groups.push_back(g);
  }
  return out;
}

}  // namespace thermo
