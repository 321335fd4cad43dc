#include <cmath>
#include <limits>
#include <vector>

#include "thermo/detection.hpp"
#include "thermo/errors.hpp"

namespace thermo {

namespace {

struct Component {
  std::size_t min_x, min_y, max_x, max_y;
  std::size_t pixels = 0;
  double sum_x = 0.0, sum_y = 0.0;
};

}  // namespace

std::vector<Detection> blob_detect(const ThermalFrame& frame, const BlobParams& params) {
  if (!(params.min_area >= 1.0)) throw ArgumentError("blob_detect: min_area must be >= 1");
  const std::size_t w = frame.width, h = frame.height;
  std::vector<std::uint8_t> visited(w * h, 0);
  std::vector<std::size_t> stack;
  std::vector<Component> comps;

  for (std::size_t start = 0; start < w * h; ++start) {
    if (visited[start] || frame.temps[start] < params.min_temp) continue;
    Component c{start % w, start / w, start % w, start / w};
    visited[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      const std::size_t x = idx % w, y = idx / w;
      c.min_x = std::min(c.min_x, x);
      c.max_x = std::max(c.max_x, x);
      c.min_y = std::min(c.min_y, y);
      c.max_y = std::max(c.max_y, y);
      ++c.pixels;
      c.sum_x += double(x) + 0.5;
      c.sum_y += double(y) + 0.5;
      auto push = [&](std::size_t n) {
        if (!visited[n] && frame.temps[n] >= params.min_temp) {
          visited[n] = 1;
          stack.push_back(n);
        }
      };
      if (x > 0) push(idx - 1);
      if (x + 1 < w) push(idx + 1);
      if (y > 0) push(idx - w);
      if (y + 1 < h) push(idx + w);
    }
    if (double(c.pixels) >= params.min_area) comps.push_back(c);
  }

  const BoundingBox bed = params.bed_region.value_or(BoundingBox{double(w) / 4, double(h) / 4, double(w) / 2, double(h) / 2});
  const double bed_cx = bed.x + bed.w / 2, bed_cy = bed.y + bed.h / 2;

  std::vector<Detection> out;
  out.reserve(comps.size());
  std::size_t patient = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto& c = comps[i];
    BoundingBox box{double(c.min_x), double(c.min_y), double(c.max_x - c.min_x + 1), double(c.max_y - c.min_y + 1)};
    out.push_back({box, ObjectClass::Worker, double(c.pixels) / area(box)});
    const double d = std::hypot(c.sum_x / double(c.pixels) - bed_cx, c.sum_y / double(c.pixels) - bed_cy);
    if (d < best) {
      best = d;
      patient = i;
    }
  }
  if (!out.empty()) out[patient].cls = ObjectClass::Patient;
  return out;
}

}  // namespace thermo
