#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thermo/frame_io.hpp"

namespace thermo {

// Axis-aligned box, top-left corner, y grows downward.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  bool valid() const { return w > 0.0 && h > 0.0; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

enum class ObjectClass { Patient, Worker };

std::string_view to_string(ObjectClass cls);
// Accepts "patient" / "worker"; anything else yields nullopt.
std::optional<ObjectClass> parse_class(std::string_view text);

struct Detection {
  BoundingBox box;
  ObjectClass cls = ObjectClass::Patient;
  double confidence = 1.0;
};

struct FrameDetections {
  double timestamp = 0.0;
  std::vector<Detection> detections;

  std::size_t count(ObjectClass cls) const;
};

struct Resolution {
  std::size_t width = 0;
  std::size_t height = 0;
};

double area(const BoundingBox& b);
double intersection_area(const BoundingBox& a, const BoundingBox& b);
double iou(const BoundingBox& a, const BoundingBox& b);

// Intersection with [0, width] x [0, height]; nullopt when nothing remains.
std::optional<BoundingBox> clamp_to(const BoundingBox& b, Resolution res);

// Half-open pixel index range covered by a box: pixel (c, r) is inside when its
// center (c + 0.5, r + 0.5) lies in [x, x + w) x [y, y + h). Clipped to res.
struct PixelSpan {
  std::size_t x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  bool empty() const { return x0 >= x1 || y0 >= y1; }
};
PixelSpan pixel_span(const BoundingBox& b, Resolution res);

// One JSON object per line: {"t": s, "dets": [{"cls": .., "conf": .., "box": [x,y,w,h]}]}.
// Frames come back sorted by t. With a resolution, boxes are clamped and
// boxes falling entirely outside are dropped. When require_conf is false a
// missing "conf" reads as 1.0 (ground-truth files omit it).
// Throws FormatError carrying the 1-based line number.
std::vector<FrameDetections> parse_detections_jsonl(std::istream& in,
                                                    std::optional<Resolution> resolution = std::nullopt,
                                                    bool require_conf = true);
std::vector<FrameDetections> load_detections(const std::filesystem::path& path,
                                             std::optional<Resolution> resolution = std::nullopt,
                                             bool require_conf = true);

// Serializes in the same schema; include_conf=false writes ground-truth style.
std::string detections_to_jsonl(const std::vector<FrameDetections>& frames, bool include_conf = true);

struct BlobParams {
  double min_temp = 30.0;
  double min_area = 50.0;
  // Static patient zone; the frame center when unset.
  std::optional<BoundingBox> bed_region;
};

// Threshold + 4-connected components. Each component becomes a detection whose
// box is the component's pixel extent and whose confidence is
// component_area / box_area. The component with centroid nearest the bed
// region center is the Patient, all others are Workers.
std::vector<Detection> blob_detect(const ThermalFrame& frame, const BlobParams& params);

}  // namespace thermo
