#include "thermo/detection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "thermo/errors.hpp"

namespace thermo {

using nlohmann::json;

std::string_view to_string(ObjectClass cls) {
  return cls == ObjectClass::Patient ? "patient" : "worker";
}

std::optional<ObjectClass> parse_class(std::string_view text) {
  if (text == "patient") return ObjectClass::Patient;
  if (text == "worker") return ObjectClass::Worker;
  return std::nullopt;
}

std::size_t FrameDetections::count(ObjectClass cls) const {
  return static_cast<std::size_t>(
      std::count_if(detections.begin(), detections.end(), [cls](const Detection& d) { return d.cls == cls; }));
}

double area(const BoundingBox& b) { return b.w * b.h; }

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double iy = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  return ix * iy;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = area(a) + area(b) - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

std::optional<BoundingBox> clamp_to(const BoundingBox& b, Resolution res) {
  const double x0 = std::clamp(b.x, 0.0, double(res.width));
  const double y0 = std::clamp(b.y, 0.0, double(res.height));
  const double x1 = std::clamp(b.right(), 0.0, double(res.width));
  const double y1 = std::clamp(b.bottom(), 0.0, double(res.height));
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return BoundingBox{x0, y0, x1 - x0, y1 - y0};
}

PixelSpan pixel_span(const BoundingBox& b, Resolution res) {
  auto clip = [](double v, std::size_t hi) {
    if (v <= 0.0) return std::size_t{0};
    return std::min(static_cast<std::size_t>(v), hi);
  };
  return {clip(std::ceil(b.x - 0.5), res.width), clip(std::ceil(b.right() - 0.5), res.width),
          clip(std::ceil(b.y - 0.5), res.height), clip(std::ceil(b.bottom() - 0.5), res.height)};
}

namespace {

Detection parse_detection(const json& j, std::size_t line, bool require_conf) {
  if (!j.is_object()) throw FormatError("detection entry is not an object", line);
  Detection d;
  const auto cls_it = j.find("cls");
  if (cls_it == j.end() || !cls_it->is_string()) throw FormatError("detection lacks string \"cls\"", line);
  auto cls = parse_class(cls_it->get<std::string>());
  if (!cls) throw FormatError("unknown class \"" + cls_it->get<std::string>() + "\"", line);
  d.cls = *cls;

  const auto conf_it = j.find("conf");
  if (conf_it != j.end()) {
    if (!conf_it->is_number()) throw FormatError("\"conf\" is not a number", line);
    d.confidence = conf_it->get<double>();
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) throw FormatError("\"conf\" outside [0, 1]", line);
  } else if (require_conf) {
    throw FormatError("detection lacks \"conf\"", line);
  }

  const auto box_it = j.find("box");
  if (box_it == j.end() || !box_it->is_array() || box_it->size() != 4)
    throw FormatError("\"box\" must be [x, y, w, h]", line);
  for (const auto& v : *box_it)
    if (!v.is_number()) throw FormatError("\"box\" entries must be numbers", line);
  d.box = {(*box_it)[0].get<double>(), (*box_it)[1].get<double>(), (*box_it)[2].get<double>(),
           (*box_it)[3].get<double>()};
  if (!std::isfinite(d.box.x) || !std::isfinite(d.box.y) || !(d.box.w > 0.0) || !(d.box.h > 0.0) ||
      !std::isfinite(d.box.w) || !std::isfinite(d.box.h))
    throw FormatError("\"box\" needs finite coordinates and positive extent", line);
  return d;
}

}  // namespace

std::vector<FrameDetections> parse_detections_jsonl(std::istream& in, std::optional<Resolution> resolution,
                                                    bool require_conf) {
  std::vector<FrameDetections> frames;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("malformed JSON: ") + e.what(), line);
    }
    if (!j.is_object()) throw FormatError("line is not a JSON object", line);
    const auto t_it = j.find("t");
    if (t_it == j.end() || !t_it->is_number()) throw FormatError("missing numeric \"t\"", line);
    FrameDetections frame;
    frame.timestamp = t_it->get<double>();
    if (!(frame.timestamp >= 0.0)) throw FormatError("\"t\" must be non-negative", line);
    const auto dets_it = j.find("dets");
    if (dets_it == j.end() || !dets_it->is_array()) throw FormatError("missing array \"dets\"", line);
    for (const auto& dj : *dets_it) {
      auto det = parse_detection(dj, line, require_conf);
      if (resolution) {
        auto clamped = clamp_to(det.box, *resolution);
        if (!clamped) continue;
        det.box = *clamped;
      }
      frame.detections.push_back(det);
    }
    frames.push_back(std::move(frame));
  }
  std::stable_sort(frames.begin(), frames.end(),
                   [](const FrameDetections& a, const FrameDetections& b) { return a.timestamp < b.timestamp; });
  return frames;
}

std::vector<FrameDetections> load_detections(const std::filesystem::path& path,
                                             std::optional<Resolution> resolution, bool require_conf) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_detections_jsonl(in, resolution, require_conf);
}

std::string detections_to_jsonl(const std::vector<FrameDetections>& frames, bool include_conf) {
  std::ostringstream out;
  for (const auto& f : frames) {
    json line;
    line["t"] = f.timestamp;
    line["dets"] = json::array();
    for (const auto& d : f.detections) {
      json dj;
      dj["cls"] = std::string(to_string(d.cls));
      if (include_conf) dj["conf"] = d.confidence;
      dj["box"] = {d.box.x, d.box.y, d.box.w, d.box.h};
      line["dets"].push_back(std::move(dj));
    }
    out << line.dump() << '\n';
  }
  return out.str();
}

}  // namespace thermo
