#pragma once

// Dense two-frame optical flow by local polynomial expansion.
//
// Each pixel neighbourhood is approximated by a quadratic
//     f(u) ~ u^T A u + b^T u + c,   u = (x, y)
// fitted by Gaussian-weighted least squares. If the next frame is the previous
// one translated by d, then A_next = A_prev and b_next = b_prev - 2 A d, so d
// follows from coefficient differences. Windowed normal equations make the
// estimate robust, and a coarse-to-fine pyramid extends the capture range.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thermo/detection.hpp"
#include "thermo/frame_io.hpp"

namespace thermo {

struct FlowField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> dx;
  std::vector<double> dy;

  static FlowField zeros(std::size_t width, std::size_t height);
  Resolution resolution() const { return {width, height}; }
};

struct FlowParams {
  int pyramid_levels = 3;      // total levels including full resolution
  double pyramid_scale = 0.5;  // size ratio between consecutive levels
  int window = 15;             // side of the Gaussian averaging window (odd)
  int iterations = 3;          // warp/solve passes per level
  int poly_n = 5;              // side of the expansion neighbourhood (odd)
  double poly_sigma = 1.1;     // std-dev of the expansion weight

  // Throws ArgumentError naming the first field out of range.
  void validate() const;
};

// Real-valued single-channel image; used for pyramid levels.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> data;

  static Image from_gray(const GrayFrame& frame);
  double at(std::size_t x, std::size_t y) const { return data[y * width + x]; }
};

// Per-pixel quadratic coefficients, structure-of-arrays. A = [[a11, a12], [a12, a22]].
struct PolyCoeffs {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> a11, a12, a22, b1, b2, c;
};

// Borders use edge replication. Throws ArgumentError when the image is smaller
// than poly_n on either side, or when poly_n / poly_sigma are invalid.
PolyCoeffs poly_expand(const GrayFrame& frame, int poly_n, double poly_sigma);
PolyCoeffs poly_expand(const Image& image, int poly_n, double poly_sigma);

// Systems with condition estimate above this fall back to the incoming estimate.
inline constexpr double kMaxFlowCondition = 1e6;

// Flow such that prev(p) ~ next(p + d(p)). The optional seed initializes the
// coarsest level and is the fallback for ill-conditioned pixels.
FlowField estimate_flow(const GrayFrame& prev, const GrayFrame& next, const FlowParams& params = {},
                        const FlowField* seed = nullptr);

struct MagnitudeStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

// Statistics of |(dx, dy)| over the selected pixels (all pixels without a mask).
// Summation runs in row-major order. Throws ArgumentError for a mask of the wrong
// size or with no pixel selected.
MagnitudeStats magnitude_stats(const FlowField& flow,
                               std::optional<std::span<const std::uint8_t>> mask = std::nullopt);

// 1 for each pixel of `res` inside the box (pixel-centre rule), else 0.
std::vector<std::uint8_t> box_mask(Resolution res, const BoundingBox& box);

// Copy of flow with (dx, dy) = 0 on every pixel inside patient and at least one worker box.
FlowField mask_worker_regions(const FlowField& flow, const BoundingBox& patient,
                              std::span<const BoundingBox> workers);

// Debug dump: u32 width, u32 height (little-endian), then dx and dy grids as f32.
std::vector<std::byte> encode_flow_dump(const FlowField& flow);
FlowField decode_flow_dump(std::span<const std::byte> bytes);

}  // namespace thermo
