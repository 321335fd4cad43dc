#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "thermo/npy.hpp"

namespace thermo {

inline constexpr double kMinCelsius = -20.0;
inline constexpr double kMaxCelsius = 120.0;
// Smallest side accepted for frames entering the flow pipeline.
inline constexpr std::size_t kMinFrameSide = 8;

// Raw sensor frame: row-major Celsius grid.
struct ThermalFrame {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> temps;
  double timestamp = 0.0;

  double at(std::size_t x, std::size_t y) const { return temps[y * width + x]; }
};

// 8-bit view of a thermal frame after contrast windowing.
struct GrayFrame {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

struct ManifestEntry {
  std::filesystem::path path;
  double t = 0.0;
};

struct SequenceManifest {
  double dt = 1.0;
  std::size_t width = 0;   // 0 when the manifest does not declare a resolution
  std::size_t height = 0;
  std::vector<ManifestEntry> frames;
};

// Checks size, finiteness, and the clinical range. Throws ValidationError.
void validate(const ThermalFrame& frame);
// validate() plus the minimum side needed by the flow expansion window.
void validate_for_flow(const ThermalFrame& frame);

ThermalFrame read_npy_frame(std::span<const std::byte> bytes);
std::vector<std::byte> write_npy_frame(const ThermalFrame& frame, npy::DType dtype = npy::DType::Float64);

ThermalFrame load_npy_frame(const std::filesystem::path& path, double timestamp = 0.0);

// pixel = round(255 * clamp((t - lo) / (hi - lo), 0, 1)), rounding half away from zero.
GrayFrame normalize_to_gray(const ThermalFrame& frame, double lo, double hi);

// (p2, p98) of the temperatures, widened to (p - 0.5, p + 0.5) when degenerate.
std::pair<double, double> auto_window(const ThermalFrame& frame);

// Relative frame paths are resolved against the manifest's directory.
// Throws IoError when unreadable and FormatError on schema problems.
SequenceManifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_json(const SequenceManifest& manifest);

}  // namespace thermo
