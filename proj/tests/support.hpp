#pragma once

// Test fixtures and independent oracles. Nothing here calls the code under
// test for the quantity it is checking.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "thermo/detection.hpp"
#include "thermo/frame_io.hpp"
#include "thermo/optical_flow.hpp"

namespace testing {

using thermo::BoundingBox;

// ---- box rasterization ---------------------------------------------------

// Set of unit pixels covered by an integer box on a grid.
inline std::set<std::pair<int, int>> raster(const BoundingBox& b) {
  std::set<std::pair<int, int>> px;
  for (int y = int(b.y); y < int(b.y + b.h); ++y)
    for (int x = int(b.x); x < int(b.x + b.w); ++x) px.insert({x, y});
  return px;
}

inline double raster_intersection(const BoundingBox& a, const BoundingBox& b) {
  const auto pa = raster(a), pb = raster(b);
  std::size_t n = 0;
  for (const auto& p : pa) n += pb.count(p);
  return double(n);
}

inline double raster_iou(const BoundingBox& a, const BoundingBox& b) {
  const double i = raster_intersection(a, b);
  return i / (double(raster(a).size()) + double(raster(b).size()) - i);
}

// Random integer box fully inside a side x side grid.
inline BoundingBox random_box(std::mt19937_64& rng, int side) {
  std::uniform_int_distribution<int> pos(0, side - 1);
  const int x = pos(rng), y = pos(rng);
  std::uniform_int_distribution<int> ew(1, side - x), eh(1, side - y);
  return {double(x), double(y), double(ew(rng)), double(eh(rng))};
}

// ---- connected components ------------------------------------------------

struct Component {
  int x0, y0, x1, y1;  // inclusive pixel extent
  int pixels;
};

// Recursive-free labelling by repeated neighbour propagation until stable.
// Slow but obviously correct; fine for small grids.
inline std::vector<Component> label_components(const std::vector<std::uint8_t>& mask, int w, int h) {
  std::vector<int> label(mask.size(), -1);
  for (int i = 0; i < w * h; ++i)
    if (mask[std::size_t(i)]) label[std::size_t(i)] = i;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int i = y * w + x;
        if (label[std::size_t(i)] < 0) continue;
        const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
        for (const auto& n : nb) {
          if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
          const int j = n[1] * w + n[0];
          if (label[std::size_t(j)] >= 0 && label[std::size_t(j)] < label[std::size_t(i)]) {
            label[std::size_t(i)] = label[std::size_t(j)];
            changed = true;
          }
        }
      }
  }
  std::vector<int> roots;
  for (int i = 0; i < w * h; ++i)
    if (label[std::size_t(i)] == i) roots.push_back(i);
  std::vector<Component> out;
  for (int r : roots) {
    Component c{w, h, -1, -1, 0};
    for (int i = 0; i < w * h; ++i)
      if (label[std::size_t(i)] == r) {
        c.x0 = std::min(c.x0, i % w);
        c.x1 = std::max(c.x1, i % w);
        c.y0 = std::min(c.y0, i / w);
        c.y1 = std::max(c.y1, i / w);
        ++c.pixels;
      }
    out.push_back(c);
  }
  return out;
}

// ---- textures for flow ---------------------------------------------------

// Sum of random plane waves; shift (sx, sy) samples the same pattern at (x - sx, y - sy),
// so the content moves by +s between the two frames.
struct Texture {
  std::vector<double> waves;  // amplitude, kx, ky, phase per wave

  explicit Texture(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 6; ++k) {
      const double f = 0.15 + 0.35 * u(rng), th = 2 * std::numbers::pi * u(rng);
      waves.insert(waves.end(), {20 + 15 * u(rng), f * std::cos(th), f * std::sin(th), 2 * std::numbers::pi * u(rng)});
    }
  }

  thermo::GrayFrame render(int w, int h, double sx = 0.0, double sy = 0.0) const {
    thermo::GrayFrame g{std::size_t(w), std::size_t(h), std::vector<std::uint8_t>(std::size_t(w * h))};
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double v = 128.0;
        for (std::size_t k = 0; k < waves.size(); k += 4)
          v += waves[k] * std::sin(waves[k + 1] * (x - sx) + waves[k + 2] * (y - sy) + waves[k + 3]);
        g.pixels[std::size_t(y * w + x)] = std::uint8_t(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    return g;
  }
};

// Mean endpoint error against a constant displacement over the central 75% of the frame.
inline double central_epe(const thermo::FlowField& f, double sx, double sy) {
  const auto x0 = f.width / 8, x1 = f.width - f.width / 8;
  const auto y0 = f.height / 8, y1 = f.height - f.height / 8;
  double sum = 0.0;
  std::size_t n = 0;
  for (auto y = y0; y < y1; ++y)
    for (auto x = x0; x < x1; ++x) {
      sum += std::hypot(f.dx[y * f.width + x] - sx, f.dy[y * f.width + x] - sy);
      ++n;
    }
  return sum / double(n);
}

// ---- average precision ---------------------------------------------------

struct FlatDet {
  std::size_t frame;
  BoundingBox box;
  double conf;
};

// Greedy VOC matching followed by AP from the rank enumeration:
// AP = (1/N) sum_{j=1..N} max{ precision_k : tp_k >= j }, summed in long double.
// gts is indexed by frame; only one class is considered.
inline double brute_force_ap(const std::vector<FlatDet>& dets_in, const std::vector<std::vector<BoundingBox>>& gts,
                             double thresh) {
  std::size_t n_gt = 0;
  for (const auto& f : gts) n_gt += f.size();
  std::vector<FlatDet> dets = dets_in;
  std::stable_sort(dets.begin(), dets.end(), [](const FlatDet& a, const FlatDet& b) { return a.conf > b.conf; });
  std::vector<std::vector<bool>> used(gts.size());
  for (std::size_t f = 0; f < gts.size(); ++f) used[f].assign(gts[f].size(), false);
  std::vector<std::size_t> tp_at;  // cumulative TP after each rank
  std::size_t tp = 0;
  for (const auto& d : dets) {
    int best = -1;
    double best_v = -1.0;
    for (std::size_t g = 0; g < gts[d.frame].size(); ++g) {
      if (used[d.frame][g]) continue;
      const double v = raster_iou(d.box, gts[d.frame][g]);
      if (v > best_v) {
        best_v = v;
        best = int(g);
      }
    }
    if (best >= 0 && best_v >= thresh) {
      used[d.frame][std::size_t(best)] = true;
      ++tp;
    }
    tp_at.push_back(tp);
  }
  long double total = 0.0L;
  for (std::size_t j = 1; j <= n_gt; ++j) {
    long double best_p = 0.0L;
    for (std::size_t k = 0; k < tp_at.size(); ++k)
      if (tp_at[k] >= j) best_p = std::max(best_p, (long double)tp_at[k] / (long double)(k + 1));
    total += best_p;
  }
  return double(total / (long double)n_gt);
}

// ---- misc ----------------------------------------------------------------

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("thermoward_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline thermo::FlowField uniform_flow(std::size_t w, std::size_t h, double dx, double dy) {
  return {w, h, std::vector<double>(w * h, dx), std::vector<double>(w * h, dy)};
}

}  // namespace testing
