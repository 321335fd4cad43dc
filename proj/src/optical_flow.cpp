#include "thermo/optical_flow.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "thermo/errors.hpp"

namespace thermo {

namespace {

// Smallest pyramid level side that still gets its own pass.
constexpr std::size_t kMinLevelSide = 16;

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (static_cast<std::size_t>(i) >= n) return n - 1;
  return static_cast<std::size_t>(i);
}

// Unnormalized Gaussian taps g[0..radius].
std::vector<double> half_kernel(int radius, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(radius) + 1);
  for (int k = 0; k <= radius; ++k) g[static_cast<std::size_t>(k)] = std::exp(-double(k * k) / (2.0 * sigma * sigma));
  return g;
}

// Normalized separable Gaussian smoothing of `channels` interleaved grids, replicated borders.
void gaussian_smooth(std::vector<double>& data, std::size_t width, std::size_t height, std::size_t channels,
                     int radius, double sigma) {
  if (radius <= 0) return;
  auto g = half_kernel(radius, sigma);
  double sum = g[0];
  for (int k = 1; k <= radius; ++k) sum += 2.0 * g[static_cast<std::size_t>(k)];
  for (auto& v : g) v /= sum;

  std::vector<double> tmp(data.size());
  // vertical
  for (std::size_t y = 0; y < height; ++y) {
    double* out = &tmp[y * width * channels];
    const double* row0 = &data[y * width * channels];
    for (std::size_t i = 0; i < width * channels; ++i) out[i] = row0[i] * g[0];
    for (int k = 1; k <= radius; ++k) {
      const double* up = &data[clamp_index(std::ptrdiff_t(y) - k, height) * width * channels];
      const double* dn = &data[clamp_index(std::ptrdiff_t(y) + k, height) * width * channels];
      const double gk = g[static_cast<std::size_t>(k)];
      for (std::size_t i = 0; i < width * channels; ++i) out[i] += gk * (up[i] + dn[i]);
    }
  }
  // horizontal, over a row padded by replication
  std::vector<double> padded((width + 2 * std::size_t(radius)) * channels);
  for (std::size_t y = 0; y < height; ++y) {
    const double* in = &tmp[y * width * channels];
    for (std::size_t x = 0; x < width + 2 * std::size_t(radius); ++x) {
      const std::size_t src = clamp_index(std::ptrdiff_t(x) - radius, width);
      for (std::size_t c = 0; c < channels; ++c) padded[x * channels + c] = in[src * channels + c];
    }
    double* out = &data[y * width * channels];
    const double* p = &padded[std::size_t(radius) * channels];
    for (std::size_t i = 0; i < width * channels; ++i) out[i] = p[i] * g[0];
    for (int k = 1; k <= radius; ++k) {
      const double gk = g[static_cast<std::size_t>(k)];
      const double* l = p - std::size_t(k) * channels;
      const double* r = p + std::size_t(k) * channels;
      for (std::size_t i = 0; i < width * channels; ++i) out[i] += gk * (l[i] + r[i]);
    }
  }
}

// Bilinear sample with clamped (edge-replicated) coordinates.
double sample(const std::vector<double>& grid, std::size_t width, std::size_t height, double fx, double fy) {
  fx = std::clamp(fx, 0.0, double(width - 1));
  fy = std::clamp(fy, 0.0, double(height - 1));
  const auto x0 = static_cast<std::size_t>(fx);
  const auto y0 = static_cast<std::size_t>(fy);
  const std::size_t x1 = std::min(x0 + 1, width - 1), y1 = std::min(y0 + 1, height - 1);
  const double ax = fx - double(x0), ay = fy - double(y0);
  const double top = grid[y0 * width + x0] * (1 - ax) + grid[y0 * width + x1] * ax;
  const double bot = grid[y1 * width + x0] * (1 - ax) + grid[y1 * width + x1] * ax;
  return top * (1 - ay) + bot * ay;
}

// Pixel-centre aligned bilinear resize.
std::vector<double> resize(const std::vector<double>& src, std::size_t sw, std::size_t sh, std::size_t dw,
                           std::size_t dh) {
  std::vector<double> dst(dw * dh);
  const double sx = double(sw) / double(dw), sy = double(sh) / double(dh);
  for (std::size_t y = 0; y < dh; ++y)
    for (std::size_t x = 0; x < dw; ++x)
      dst[y * dw + x] = sample(src, sw, sh, (double(x) + 0.5) * sx - 0.5, (double(y) + 0.5) * sy - 0.5);
  return dst;
}

Image build_level(const Image& full, double scale, std::size_t width, std::size_t height) {
  if (width == full.width && height == full.height) return full;
  Image level{full.width, full.height, full.data};
  // Anti-alias before decimation.
  const double sigma = (1.0 / scale - 1.0) * 0.5;
  const int radius = std::max(1, static_cast<int>(std::lround(sigma * 5.0)) / 2);
  gaussian_smooth(level.data, level.width, level.height, 1, radius, sigma);
  return Image{width, height, resize(level.data, full.width, full.height, width, height)};
}

void check_poly_args(int poly_n, double poly_sigma) {
  if (poly_n < 5 || poly_n % 2 == 0) throw ArgumentError("poly_n must be an odd integer >= 5");
  if (!(poly_sigma > 0.0)) throw ArgumentError("poly_sigma must be positive");
}

}  // namespace

FlowField FlowField::zeros(std::size_t width, std::size_t height) {
  return {width, height, std::vector<double>(width * height, 0.0), std::vector<double>(width * height, 0.0)};
}

void FlowParams::validate() const {
  if (pyramid_levels < 1) throw ArgumentError("pyramid_levels must be >= 1");
  if (!(pyramid_scale > 0.0 && pyramid_scale < 1.0)) throw ArgumentError("pyramid_scale must be in (0, 1)");
  if (window < 5 || window % 2 == 0) throw ArgumentError("window must be an odd integer >= 5");
  if (iterations < 1) throw ArgumentError("iterations must be >= 1");
  check_poly_args(poly_n, poly_sigma);
}

Image Image::from_gray(const GrayFrame& frame) {
  Image img{frame.width, frame.height, std::vector<double>(frame.pixels.size())};
  for (std::size_t i = 0; i < frame.pixels.size(); ++i) img.data[i] = frame.pixels[i];
  return img;
}

PolyCoeffs poly_expand(const GrayFrame& frame, int poly_n, double poly_sigma) {
  return poly_expand(Image::from_gray(frame), poly_n, poly_sigma);
}

PolyCoeffs poly_expand(const Image& image, int poly_n, double poly_sigma) {
  check_poly_args(poly_n, poly_sigma);
  const std::size_t w = image.width, h = image.height;
  if (w < std::size_t(poly_n) || h < std::size_t(poly_n))
    throw ArgumentError("image " + std::to_string(w) + "x" + std::to_string(h) + " smaller than the " +
                        std::to_string(poly_n) + "x" + std::to_string(poly_n) + " expansion neighbourhood");
  const int n = poly_n / 2;
  const auto g = half_kernel(n, poly_sigma);

  // One-dimensional weight moments: s0 = sum g, s2 = sum k^2 g, s4 = sum k^4 g.
  double s0 = g[0], s2 = 0.0, s4 = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double gk = g[static_cast<std::size_t>(k)], kk = double(k * k);
    s0 += 2 * gk;
    s2 += 2 * kk * gk;
    s4 += 2 * kk * kk * gk;
  }
  // Normal matrix over basis {1, x, y, x^2, y^2, xy}: the odd terms are decoupled,
  // {1, x^2, y^2} form a symmetric 3x3 block.
  const std::array<std::array<double, 3>, 3> blk{{{s0 * s0, s0 * s2, s0 * s2},
                                                  {s0 * s2, s0 * s4, s2 * s2},
                                                  {s0 * s2, s2 * s2, s0 * s4}}};
  std::array<std::array<double, 3>, 3> inv{};
  {
    const auto& m = blk;
    const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                       m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                       m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
    inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
    inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  }
  const double inv_lin = 1.0 / (s0 * s2);
  const double inv_xy = 1.0 / (s2 * s2);

  PolyCoeffs out{w, h, {}, {}, {}, {}, {}, {}};
  for (auto* v : {&out.a11, &out.a12, &out.a22, &out.b1, &out.b2, &out.c}) v->resize(w * h);

  // Vertical pass moments per column: v0 = sum g f, v1 = sum k g f, v2 = sum k^2 g f.
  std::vector<double> v0(w), v1(w), v2(w);
  for (std::size_t y = 0; y < h; ++y) {
    const double* row = &image.data[y * w];
    for (std::size_t x = 0; x < w; ++x) {
      v0[x] = g[0] * row[x];
      v1[x] = 0.0;
      v2[x] = 0.0;
    }
    for (int k = 1; k <= n; ++k) {
      const double* up = &image.data[clamp_index(std::ptrdiff_t(y) - k, h) * w];
      const double* dn = &image.data[clamp_index(std::ptrdiff_t(y) + k, h) * w];
      const double gk = g[static_cast<std::size_t>(k)], kg = k * gk, kkg = k * k * gk;
      for (std::size_t x = 0; x < w; ++x) {
        v0[x] += gk * (up[x] + dn[x]);
        v1[x] += kg * (dn[x] - up[x]);
        v2[x] += kkg * (up[x] + dn[x]);
      }
    }
    for (std::size_t x = 0; x < w; ++x) {
      double m0 = g[0] * v0[x], mx = 0, mxx = 0, my = g[0] * v1[x], mxy = 0, myy = g[0] * v2[x];
      for (int k = 1; k <= n; ++k) {
        const std::size_t l = clamp_index(std::ptrdiff_t(x) - k, w);
        const std::size_t r = clamp_index(std::ptrdiff_t(x) + k, w);
        const double gk = g[static_cast<std::size_t>(k)], kg = k * gk, kkg = k * k * gk;
        m0 += gk * (v0[l] + v0[r]);
        mx += kg * (v0[r] - v0[l]);
        mxx += kkg * (v0[l] + v0[r]);
        my += gk * (v1[l] + v1[r]);
        mxy += kg * (v1[r] - v1[l]);
        myy += gk * (v2[l] + v2[r]);
      }
      const std::size_t i = y * w + x;
      out.c[i] = inv[0][0] * m0 + inv[0][1] * mxx + inv[0][2] * myy;
      out.a11[i] = inv[1][0] * m0 + inv[1][1] * mxx + inv[1][2] * myy;
      out.a22[i] = inv[2][0] * m0 + inv[2][1] * mxx + inv[2][2] * myy;
      out.b1[i] = mx * inv_lin;
      out.b2[i] = my * inv_lin;
      out.a12[i] = 0.5 * mxy * inv_xy;
    }
  }
  return out;
}

namespace {

// One warp/solve pass at a single pyramid level. `flow` is updated in place;
// `fallback` supplies the value for pixels whose system is ill-conditioned.
void update_flow(const PolyCoeffs& r0, const PolyCoeffs& r1, FlowField& flow, const FlowField& fallback,
                 int window) {
  const std::size_t w = flow.width, h = flow.height;
  constexpr std::size_t kCh = 5;  // G11, G12, G22, h1, h2
  std::vector<double> m(w * h * kCh);

  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      const double dx = flow.dx[i], dy = flow.dy[i];
      // Bilinear weights at p + d, clamped to the frame, shared by all channels.
      const double fx = std::clamp(double(x) + dx, 0.0, double(w - 1));
      const double fy = std::clamp(double(y) + dy, 0.0, double(h - 1));
      const auto x0 = static_cast<std::size_t>(fx), y0 = static_cast<std::size_t>(fy);
      const std::size_t x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const double ax = fx - double(x0), ay = fy - double(y0);
      const double w00 = (1 - ax) * (1 - ay), w01 = ax * (1 - ay), w10 = (1 - ax) * ay, w11 = ax * ay;
      const std::size_t i00 = y0 * w + x0, i01 = y0 * w + x1, i10 = y1 * w + x0, i11 = y1 * w + x1;
      auto at = [&](const std::vector<double>& g) { return w00 * g[i00] + w01 * g[i01] + w10 * g[i10] + w11 * g[i11]; };
      const double a11 = 0.5 * (r0.a11[i] + at(r1.a11));
      const double a12 = 0.5 * (r0.a12[i] + at(r1.a12));
      const double a22 = 0.5 * (r0.a22[i] + at(r1.a22));
      // delta_b = -1/2 (b_next(p + d) - b_prev(p)) + A d
      const double db1 = -0.5 * (at(r1.b1) - r0.b1[i]) + a11 * dx + a12 * dy;
      const double db2 = -0.5 * (at(r1.b2) - r0.b2[i]) + a12 * dx + a22 * dy;
      double* mi = &m[i * kCh];
      mi[0] = a11 * a11 + a12 * a12;
      mi[1] = a12 * (a11 + a22);
      mi[2] = a12 * a12 + a22 * a22;
      mi[3] = a11 * db1 + a12 * db2;
      mi[4] = a12 * db1 + a22 * db2;
    }
  }

  const int radius = window / 2;
  gaussian_smooth(m, w, h, kCh, radius, 0.3 * radius);

  for (std::size_t i = 0; i < w * h; ++i) {
    const double* mi = &m[i * kCh];
    const double g11 = mi[0], g12 = mi[1], g22 = mi[2];
    const double det = g11 * g22 - g12 * g12;
    // Eigenvalues of the symmetric PSD 2x2 system give the condition estimate.
    const double half_tr = 0.5 * (g11 + g22);
    const double disc = std::sqrt(std::max(0.0, half_tr * half_tr - det));
    const double lmax = half_tr + disc, lmin = half_tr - disc;
    if (!(lmin > 0.0) || !(det > 0.0) || lmax > kMaxFlowCondition * lmin) {
      flow.dx[i] = fallback.dx[i];
      flow.dy[i] = fallback.dy[i];
      continue;
    }
    flow.dx[i] = (g22 * mi[3] - g12 * mi[4]) / det;
    flow.dy[i] = (g11 * mi[4] - g12 * mi[3]) / det;
  }
}

FlowField resize_flow(const FlowField& src, std::size_t width, std::size_t height) {
  if (src.width == width && src.height == height) return src;
  FlowField out{width, height, resize(src.dx, src.width, src.height, width, height),
                resize(src.dy, src.width, src.height, width, height)};
  const double sx = double(width) / double(src.width), sy = double(height) / double(src.height);
  for (auto& v : out.dx) v *= sx;
  for (auto& v : out.dy) v *= sy;
  return out;
}

}  // namespace

FlowField estimate_flow(const GrayFrame& prev, const GrayFrame& next, const FlowParams& params,
                        const FlowField* seed) {
  params.validate();
  if (prev.width != next.width || prev.height != next.height)
    throw ArgumentError("estimate_flow: frames differ in size");
  if (prev.pixels.size() != prev.width * prev.height || next.pixels.size() != next.width * next.height)
    throw ArgumentError("estimate_flow: pixel buffer size mismatch");
  if (prev.width < std::size_t(params.poly_n) || prev.height < std::size_t(params.poly_n))
    throw ArgumentError("estimate_flow: frame smaller than the expansion neighbourhood");
  if (seed && (seed->width != prev.width || seed->height != prev.height))
    throw ArgumentError("estimate_flow: seed flow differs in size");

  const Image full0 = Image::from_gray(prev);
  const Image full1 = Image::from_gray(next);

  // Number of usable levels: stop once the short side would drop below kMinLevelSide.
  int levels = 1;
  {
    double scale = 1.0;
    for (int k = 1; k < params.pyramid_levels; ++k) {
      scale *= params.pyramid_scale;
      const double side = std::min(prev.width, prev.height) * scale;
      if (side < double(kMinLevelSide) || side < double(params.poly_n)) break;
      levels = k + 1;
    }
  }

  FlowField flow;
  for (int k = levels - 1; k >= 0; --k) {
    const double scale = std::pow(params.pyramid_scale, k);
    const auto lw = static_cast<std::size_t>(std::lround(double(prev.width) * scale));
    const auto lh = static_cast<std::size_t>(std::lround(double(prev.height) * scale));

    FlowField initial = flow.width == 0 ? (seed ? resize_flow(*seed, lw, lh) : FlowField::zeros(lw, lh))
                                        : resize_flow(flow, lw, lh);
    const auto r0 = poly_expand(build_level(full0, scale, lw, lh), params.poly_n, params.poly_sigma);
    const auto r1 = poly_expand(build_level(full1, scale, lw, lh), params.poly_n, params.poly_sigma);

    flow = initial;
    for (int it = 0; it < params.iterations; ++it) update_flow(r0, r1, flow, initial, params.window);
  }
  return flow;
}

MagnitudeStats magnitude_stats(const FlowField& flow, std::optional<std::span<const std::uint8_t>> mask) {
  const std::size_t n = flow.width * flow.height;
  if (mask && mask->size() != n) throw ArgumentError("magnitude_stats: mask size differs from flow");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask && !(*mask)[i]) continue;
    sum += std::hypot(flow.dx[i], flow.dy[i]);
    ++count;
  }
  if (count == 0) throw ArgumentError("magnitude_stats: no pixel selected");
  const double mean = sum / double(count);
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask && !(*mask)[i]) continue;
    const double d = std::hypot(flow.dx[i], flow.dy[i]) - mean;
    sq += d * d;
  }
  return {mean, std::sqrt(sq / double(count))};
}

std::vector<std::uint8_t> box_mask(Resolution res, const BoundingBox& box) {
  std::vector<std::uint8_t> mask(res.width * res.height, 0);
  const auto span = pixel_span(box, res);
  for (std::size_t y = span.y0; y < span.y1; ++y)
    for (std::size_t x = span.x0; x < span.x1; ++x) mask[y * res.width + x] = 1;
  return mask;
}

FlowField mask_worker_regions(const FlowField& flow, const BoundingBox& patient,
                              std::span<const BoundingBox> workers) {
  FlowField out = flow;
  const auto res = flow.resolution();
  for (const auto& worker : workers) {
    const double x0 = std::max(patient.x, worker.x), y0 = std::max(patient.y, worker.y);
    const double x1 = std::min(patient.right(), worker.right()), y1 = std::min(patient.bottom(), worker.bottom());
    if (x1 <= x0 || y1 <= y0) continue;
    const auto span = pixel_span({x0, y0, x1 - x0, y1 - y0}, res);
    for (std::size_t y = span.y0; y < span.y1; ++y)
      for (std::size_t x = span.x0; x < span.x1; ++x) {
        out.dx[y * res.width + x] = 0.0;
        out.dy[y * res.width + x] = 0.0;
      }
  }
  return out;
}

std::vector<std::byte> encode_flow_dump(const FlowField& flow) {
  const std::size_t n = flow.width * flow.height;
  std::vector<std::byte> out(8 + 8 * n);
  auto put32 = [&](std::size_t off, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out[off + b] = std::byte((v >> (8 * b)) & 0xFF);
  };
  put32(0, static_cast<std::uint32_t>(flow.width));
  put32(4, static_cast<std::uint32_t>(flow.height));
  for (std::size_t i = 0; i < n; ++i) {
    put32(8 + 4 * i, std::bit_cast<std::uint32_t>(static_cast<float>(flow.dx[i])));
    put32(8 + 4 * (n + i), std::bit_cast<std::uint32_t>(static_cast<float>(flow.dy[i])));
  }
  return out;
}

FlowField decode_flow_dump(std::span<const std::byte> bytes) {
  auto get32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= std::uint32_t(std::to_integer<std::uint8_t>(bytes[off + b])) << (8 * b);
    return v;
  };
  if (bytes.size() < 8) throw FormatError("flow dump shorter than its header");
  FlowField flow = FlowField::zeros(get32(0), get32(4));
  const std::size_t n = flow.width * flow.height;
  if (bytes.size() != 8 + 8 * n) throw FormatError("flow dump size does not match its header");
  for (std::size_t i = 0; i < n; ++i) {
    flow.dx[i] = std::bit_cast<float>(get32(8 + 4 * i));
    flow.dy[i] = std::bit_cast<float>(get32(8 + 4 * (n + i)));
  }
  return flow;
}

}  // namespace thermo
