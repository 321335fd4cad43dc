#include "thermo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>

#include "thermo/analytics.hpp"
#include "thermo/errors.hpp"
#include "thermo/io.hpp"

namespace thermo::synth {

using nlohmann::json;

namespace {

double triangle(double s, double amplitude) {
  if (amplitude <= 0.0) return 0.0;
  const double period = 4.0 * amplitude;
  s = std::fmod(s, period);
  if (s <= amplitude) return s;
  if (s <= 3.0 * amplitude) return 2.0 * amplitude - s;
  return s - period;
}

std::pair<double, double> patient_offset(const PatientScript& p, double t) {
  double ox = 0.0, oy = 0.0;
  for (const auto& m : p.motion) {
    if (t < m.start) continue;
    const double v = triangle(m.speed * (std::min(t, m.end) - m.start), m.amplitude);
    (m.axis == Axis::X ? ox : oy) += v;
  }
  return {ox, oy};
}

std::pair<double, double> worker_corner(const WorkerScript& w, double t) {
  if (w.path.empty()) return {0.0, 0.0};
  if (t <= w.path.front().t) return {w.path.front().x, w.path.front().y};
  for (std::size_t i = 1; i < w.path.size(); ++i) {
    const auto& a = w.path[i - 1];
    const auto& b = w.path[i];
    if (t <= b.t) {
      const double u = b.t > a.t ? (t - a.t) / (b.t - a.t) : 1.0;
      return {a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)};
    }
  }
  return {w.path.back().x, w.path.back().y};
}

bool inside(const BoundingBox& b, const Scenario& s) {
  return b.x >= 0.0 && b.y >= 0.0 && b.right() <= double(s.width) && b.bottom() <= double(s.height);
}

// Body-fixed texture in [-1, 1]; (u, v) are coordinates relative to the box corner.
double body_texture(double u, double v) {
  constexpr double tau = 2.0 * std::numbers::pi;
  return 0.5 * (std::sin(tau * u / 11.0) * std::cos(tau * v / 13.0) + std::sin(tau * (u + 0.7 * v) / 17.0));
}

void fill_box(ThermalFrame& frame, const BoundingBox& box, double temp, double texture) {
  const auto span = pixel_span(box, {frame.width, frame.height});
  for (std::size_t y = span.y0; y < span.y1; ++y)
    for (std::size_t x = span.x0; x < span.x1; ++x) {
      double t = temp;
      if (texture != 0.0) t += texture * body_texture(double(x) + 0.5 - box.x, double(y) + 0.5 - box.y);
      frame.temps[y * frame.width + x] = t;
    }
}

Axis parse_axis(const std::string& s) {
  if (s == "x") return Axis::X;
  if (s == "y") return Axis::Y;
  throw FormatError("scenario axis must be \"x\" or \"y\"");
}

BoundingBox box_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw FormatError("scenario box must be [x, y, w, h]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

}  // namespace

std::size_t Scenario::frame_count() const {
  if (!(dt > 0.0) || !(duration > 0.0)) return 0;
  return static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
}

void Scenario::validate() const {
  if (!(duration > 0.0)) throw ArgumentError("scenario duration must be positive");
  if (!(dt > 0.0)) throw ArgumentError("scenario dt must be positive");
  if (width < kMinFrameSide || height < kMinFrameSide) throw ArgumentError("scenario resolution below 8x8");
  if (!(noise_sigma >= 0.0)) throw ArgumentError("scenario noise_sigma must be non-negative");
  if (!(tau > 0.0)) throw ArgumentError("scenario tau must be positive");
  if (!patient.box.valid()) throw ArgumentError("scenario patient box needs positive extent");
  for (const auto& m : patient.motion) {
    if (m.end < m.start || m.start < 0.0 || m.end > duration)
      throw ArgumentError("patient motion segment outside the session");
    if (m.amplitude < 0.0 || m.speed < 0.0) throw ArgumentError("patient motion needs non-negative amplitude/speed");
  }
  for (std::size_t i = 0; i < workers.size(); ++i) {
    const auto& w = workers[i];
    if (w.exit < w.enter || w.enter < 0.0 || w.exit > duration)
      throw ArgumentError(fmt::format("worker {} presence outside the session", i));
    if (!(w.w > 0.0 && w.h > 0.0)) throw ArgumentError(fmt::format("worker {} needs positive size", i));
    if (w.path.empty()) throw ArgumentError(fmt::format("worker {} has no path", i));
  }
  for (std::size_t k = 0; k < frame_count(); ++k) {
    const double t = double(k) * dt;
    if (!inside(patient_box_at(*this, t), *this))
      throw ArgumentError(fmt::format("patient box leaves the frame at t={}", t));
    const auto boxes = worker_boxes_at(*this, t);
    for (const auto& b : boxes)
      if (!inside(b, *this)) throw ArgumentError(fmt::format("a worker box leaves the frame at t={}", t));
  }
}

BoundingBox patient_box_at(const Scenario& s, double t) {
  auto [ox, oy] = patient_offset(s.patient, t);
  auto b = s.patient.box;
  b.x += ox;
  b.y += oy;
  return b;
}

std::vector<BoundingBox> worker_boxes_at(const Scenario& s, double t) {
  std::vector<BoundingBox> out;
  for (const auto& w : s.workers) {
    if (t < w.enter || t >= w.exit) continue;
    auto [x, y] = worker_corner(w, t);
    out.push_back({x, y, w.w, w.h});
  }
  return out;
}

GroundTruth ground_truth(const Scenario& s) {
  GroundTruth g;
  const std::size_t n = s.frame_count();
  for (std::size_t k = 0; k < n; ++k) {
    const double t = double(k) * s.dt;
    const auto patient = patient_box_at(s, t);
    const auto workers = worker_boxes_at(s, t);
    FrameDetections f{t, {{patient, ObjectClass::Patient, 1.0}}};
    int pi = 0;
    for (const auto& w : workers) {
      f.detections.push_back({w, ObjectClass::Worker, 1.0});
      if (physical_interaction(patient, w, s.tau).indicator) pi = 1;
    }
    g.detections.push_back(std::move(f));
    g.worker_counts.push_back(int(workers.size()));
    g.interaction.push_back(pi);
    if (k == 0) {
      g.patient_displacement.emplace_back(0.0, 0.0);
    } else {
      const auto before = patient_box_at(s, t - s.dt);
      g.patient_displacement.emplace_back(patient.x - before.x, patient.y - before.y);
    }
    g.nursing_time += double(workers.size()) * s.dt;
    g.interaction_time += double(pi) * s.dt;
  }
  return g;
}

ThermalFrame render_frame(const Scenario& s, std::uint64_t seed, std::size_t k) {
  const double t = double(k) * s.dt;
  ThermalFrame frame{s.width, s.height, std::vector<double>(s.width * s.height, s.background_temp), t};
  fill_box(frame, patient_box_at(s, t), s.patient.temp, s.patient.texture_amplitude);
  // Workers are drawn over the patient in script order.
  for (const auto& w : s.workers) {
    if (t < w.enter || t >= w.exit) continue;
    auto [x, y] = worker_corner(w, t);
    fill_box(frame, {x, y, w.w, w.h}, w.temp, 0.0);
  }
  if (s.noise_sigma > 0.0) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(k), std::uint32_t(k >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, s.noise_sigma);
    for (auto& v : frame.temps) v = std::clamp(v + noise(rng), kMinCelsius, kMaxCelsius);
  }
  return frame;
}

Rendered render(const Scenario& s, std::uint64_t seed) {
  s.validate();
  Rendered r;
  const std::size_t n = s.frame_count();
  r.frames.reserve(n);
  for (std::size_t k = 0; k < n; ++k) r.frames.push_back(render_frame(s, seed, k));
  r.truth = ground_truth(s);
  return r;
}

Scenario scenario_from_json(const std::string& text) {
  Scenario s;
  try {
    const json j = json::parse(text);
    s.duration = j.value("duration", s.duration);
    s.dt = j.value("dt", s.dt);
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    s.background_temp = j.value("background_temp", s.background_temp);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.tau = j.value("tau", s.tau);
    if (j.contains("patient")) {
      const auto& p = j.at("patient");
      if (p.contains("box")) s.patient.box = box_from(p.at("box"));
      s.patient.temp = p.value("temp", s.patient.temp);
      s.patient.texture_amplitude = p.value("texture_amplitude", s.patient.texture_amplitude);
      for (const auto& m : p.value("motion", json::array()))
        s.patient.motion.push_back({m.at("start").get<double>(), m.at("end").get<double>(),
                                    parse_axis(m.value("axis", std::string("x"))), m.at("amplitude").get<double>(),
                                    m.at("speed").get<double>()});
    }
    for (const auto& wj : j.value("workers", json::array())) {
      WorkerScript w;
      w.enter = wj.at("enter").get<double>();
      w.exit = wj.at("exit").get<double>();
      if (wj.contains("size")) {
        w.w = wj.at("size").at(0).get<double>();
        w.h = wj.at("size").at(1).get<double>();
      }
      w.temp = wj.value("temp", w.temp);
      for (const auto& p : wj.at("path")) w.path.push_back({p.at("t").get<double>(), p.at("x").get<double>(), p.at("y").get<double>()});
      s.workers.push_back(std::move(w));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["duration"] = s.duration;
  j["dt"] = s.dt;
  j["width"] = s.width;
  j["height"] = s.height;
  j["background_temp"] = s.background_temp;
  j["noise_sigma"] = s.noise_sigma;
  j["tau"] = s.tau;
  json motion = json::array();
  for (const auto& m : s.patient.motion)
    motion.push_back({{"start", m.start}, {"end", m.end}, {"axis", m.axis == Axis::X ? "x" : "y"},
                      {"amplitude", m.amplitude}, {"speed", m.speed}});
  const auto& b = s.patient.box;
  j["patient"] = {{"box", {b.x, b.y, b.w, b.h}},
                  {"temp", s.patient.temp},
                  {"texture_amplitude", s.patient.texture_amplitude},
                  {"motion", motion}};
  j["workers"] = json::array();
  for (const auto& w : s.workers) {
    json path = json::array();
    for (const auto& p : w.path) path.push_back({{"t", p.t}, {"x", p.x}, {"y", p.y}});
    j["workers"].push_back({{"enter", w.enter}, {"exit", w.exit}, {"size", {w.w, w.h}}, {"temp", w.temp}, {"path", path}});
  }
  return j.dump(2) + "\n";
}

Scenario load_scenario(const std::filesystem::path& path) { return scenario_from_json(io::read_text(path)); }

Scenario reference_scenario() {
  Scenario s;
  s.duration = 300.0;
  s.noise_sigma = 0.1;
  s.patient.box = {140, 80, 100, 160};
  s.patient.motion = {{100, 160, Axis::X, 4, 1}, {200, 260, Axis::Y, 3, 2}};
  // Worker A: approaches the left side of the bed, touches the patient for four seconds.
  s.workers.push_back({20, 130, 40, 80, 35.0,
                       {{20, 10, 30}, {40, 80, 90}, {90, 80, 90}, {91, 130, 90}, {94, 130, 90}, {95, 80, 90},
                        {130, 20, 30}}});
  // Worker B: right side of the bed, same pattern later in the session.
  s.workers.push_back({150, 280, 40, 80, 35.0,
                       {{150, 330, 200}, {170, 260, 150}, {230, 260, 150}, {231, 215, 150}, {234, 215, 150},
                        {235, 260, 150}, {280, 330, 200}}});
  // Worker C: charting at the far wall while B is present.
  s.workers.push_back({180, 220, 40, 80, 35.0, {{180, 20, 150}, {220, 30, 150}}});
  return s;
}

void write_session(const Scenario& s, std::uint64_t seed, const std::filesystem::path& dir) {
  s.validate();
  SequenceManifest manifest;
  manifest.dt = s.dt;
  manifest.width = s.width;
  manifest.height = s.height;
  const std::size_t n = s.frame_count();
  for (std::size_t k = 0; k < n; ++k) {
    const auto frame = render_frame(s, seed, k);
    const std::string rel = fmt::format("frames/frame_{:05}.npy", k);
    io::write_atomic(dir / rel, write_npy_frame(frame, npy::DType::Float32));
    manifest.frames.push_back({rel, frame.timestamp});
  }
  io::write_atomic(dir / "manifest.json", manifest_to_json(manifest));

  const auto truth = ground_truth(s);
  io::write_atomic(dir / "truth.jsonl", detections_to_jsonl(truth.detections));
  json tj;
  tj["nursing_time_s"] = truth.nursing_time;
  tj["interaction_time_s"] = truth.interaction_time;
  tj["frames"] = json::array();
  for (std::size_t k = 0; k < n; ++k)
    tj["frames"].push_back({{"t", truth.detections[k].timestamp},
                            {"m", truth.worker_counts[k]},
                            {"pi", truth.interaction[k]},
                            {"dx", truth.patient_displacement[k].first},
                            {"dy", truth.patient_displacement[k].second}});
  io::write_atomic(dir / "truth.json", tj.dump(2) + "\n");
}

}  // namespace thermo::synth
