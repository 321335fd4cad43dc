#include "thermo/report.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace thermo {

using nlohmann::json;

namespace {
json box_json(const BoundingBox& b) { return json::array({b.x, b.y, b.w, b.h}); }
}  // namespace

std::string report_to_json(const SessionReport& r) {
  json j;
  j["dt"] = r.dt;
  j["nursing_time_s"] = r.nursing_time;
  j["interaction_time_s"] = r.interaction_time;
  j["events"] = json::array();
  for (const auto& e : r.events)
    j["events"].push_back({{"t", e.timestamp},
                           {"patient_box", box_json(e.patient_box)},
                           {"worker_box", box_json(e.worker_box)},
                           {"ratio", e.overlap_ratio}});
  j["motion"] = json::array();
  for (const auto& m : r.motion) j["motion"].push_back({{"t", m.timestamp}, {"raw", m.raw}, {"smoothed", m.smoothed}});
  j["worker_counts"] = json::array();
  for (const auto& w : r.worker_counts)
    j["worker_counts"].push_back({{"t", w.timestamp}, {"m", w.workers}, {"pi", w.interaction}});
  j["riker"] = json::array();
  for (const auto& g : r.riker.groups)
    j["riker"].push_back(
        {{"score", g.score}, {"n", g.records}, {"mean", g.mean}, {"q25", g.q25}, {"q50", g.q50}, {"q75", g.q75}});
  j["riker_excluded"] = json::array();
  for (const auto& rec : r.riker.excluded) j["riker_excluded"].push_back({{"t", rec.timestamp}, {"score", rec.score}});
  j["gaps"] = r.gaps;
  j["unmatched_detection_frames"] = r.unmatched_detection_frames;
  return j.dump(2) + "\n";
}

std::string motion_csv(const SessionReport& r) {
  std::string out = "t,raw,smoothed\n";
  for (const auto& m : r.motion) out += fmt::format("{:.3f},{:.6f},{:.6f}\n", m.timestamp, m.raw, m.smoothed);
  return out;
}

std::string events_csv(const SessionReport& r) {
  std::string out = "t,patient_x,patient_y,patient_w,patient_h,worker_x,worker_y,worker_w,worker_h,ratio\n";
  for (const auto& e : r.events) {
    const auto& p = e.patient_box;
    const auto& w = e.worker_box;
    out += fmt::format("{:.3f},{},{},{},{},{},{},{},{},{:.6f}\n", e.timestamp, p.x, p.y, p.w, p.h, w.x, w.y, w.w, w.h,
                       e.overlap_ratio);
  }
  return out;
}

std::string worker_counts_csv(const SessionReport& r) {
  std::string out = "t,workers,interaction\n";
  for (const auto& w : r.worker_counts) out += fmt::format("{:.3f},{},{}\n", w.timestamp, w.workers, w.interaction);
  return out;
}

}  // namespace thermo
