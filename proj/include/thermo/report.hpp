#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "thermo/analytics.hpp"

namespace thermo {

struct WorkerCount {
  double timestamp = 0.0;
  int workers = 0;      // m_t
  int interaction = 0;  // PI_t
};

struct SessionReport {
  double dt = 1.0;
  double nursing_time = 0.0;      // seconds; sum of worker_counts * dt
  double interaction_time = 0.0;  // seconds
  std::vector<InteractionEvent> events;
  std::vector<MotionSample> motion;
  std::vector<WorkerCount> worker_counts;
  std::vector<double> gaps;  // frame timestamps without a usable patient
  RikerAlignment riker;
  std::size_t unmatched_detection_frames = 0;
};

// report.json: nursing_time_s, interaction_time_s, events[], motion[], riker[], gaps[] and extras.
std::string report_to_json(const SessionReport& report);
// t,raw,smoothed
std::string motion_csv(const SessionReport& report);
std::string events_csv(const SessionReport& report);
std::string worker_counts_csv(const SessionReport& report);

}  // namespace thermo
