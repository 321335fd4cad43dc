#include "thermo/frame_io.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "thermo/errors.hpp"
#include "thermo/io.hpp"
#include "thermo/stats.hpp"

namespace thermo {

using nlohmann::json;

void validate(const ThermalFrame& frame) {
  if (frame.width == 0 || frame.height == 0) throw ValidationError("frame has zero extent");
  if (frame.temps.size() != frame.width * frame.height)
    throw ValidationError("frame holds " + std::to_string(frame.temps.size()) + " temperatures, expected " +
                          std::to_string(frame.width * frame.height));
  for (std::size_t i = 0; i < frame.temps.size(); ++i) {
    const double t = frame.temps[i];
    if (!std::isfinite(t))
      throw ValidationError("non-finite temperature at index " + std::to_string(i));
    if (t < kMinCelsius || t > kMaxCelsius)
      throw ValidationError("temperature " + std::to_string(t) + " C at index " + std::to_string(i) +
                            " outside [-20, 120]");
  }
}

void validate_for_flow(const ThermalFrame& frame) {
  validate(frame);
  if (frame.width < kMinFrameSide || frame.height < kMinFrameSide)
    throw ValidationError("frame " + std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                          " is smaller than 8x8");
}

ThermalFrame read_npy_frame(std::span<const std::byte> bytes) {
  auto array = npy::decode(bytes);
  ThermalFrame frame;
  frame.height = array.rows;
  frame.width = array.cols;
  frame.temps = std::move(array.values);
  validate(frame);
  return frame;
}

std::vector<std::byte> write_npy_frame(const ThermalFrame& frame, npy::DType dtype) {
  return npy::encode(frame.height, frame.width, frame.temps, dtype);
}

ThermalFrame load_npy_frame(const std::filesystem::path& path, double timestamp) {
  auto frame = read_npy_frame(io::read_bytes(path));
  frame.timestamp = timestamp;
  return frame;
}

GrayFrame normalize_to_gray(const ThermalFrame& frame, double lo, double hi) {
  if (!(lo < hi)) throw ArgumentError("normalize_to_gray: lo must be below hi");
  GrayFrame out{frame.width, frame.height, std::vector<std::uint8_t>(frame.temps.size())};
  const double span = hi - lo;
  for (std::size_t i = 0; i < frame.temps.size(); ++i) {
    const double u = std::clamp((frame.temps[i] - lo) / span, 0.0, 1.0);
    out.pixels[i] = static_cast<std::uint8_t>(std::round(255.0 * u));
  }
  return out;
}

std::pair<double, double> auto_window(const ThermalFrame& frame) {
  std::vector<double> sorted = frame.temps;
  std::sort(sorted.begin(), sorted.end());
  const double lo = percentile_sorted(sorted, 2.0);
  const double hi = percentile_sorted(sorted, 98.0);
  if (lo == hi) return {lo - 0.5, hi + 0.5};
  return {lo, hi};
}

SequenceManifest load_manifest(const std::filesystem::path& path) {
  const auto text = io::read_text(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
  SequenceManifest m;
  try {
    m.dt = doc.value("dt", 1.0);
    m.width = doc.value("width", std::size_t{0});
    m.height = doc.value("height", std::size_t{0});
    const auto base = path.parent_path();
    for (const auto& entry : doc.at("frames")) {
      std::filesystem::path p = entry.at("path").get<std::string>();
      if (p.is_relative()) p = base / p;
      m.frames.push_back({p, entry.at("t").get<double>()});
    }
  } catch (const json::exception& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
  if (!(m.dt > 0.0)) throw FormatError("manifest dt must be positive");
  for (std::size_t i = 1; i < m.frames.size(); ++i)
    if (!(m.frames[i].t > m.frames[i - 1].t))
      throw FormatError("manifest timestamps must be strictly increasing (entry " + std::to_string(i) + ")");
  return m;
}

std::string manifest_to_json(const SequenceManifest& manifest) {
  json doc;
  doc["dt"] = manifest.dt;
  if (manifest.width != 0) {
    doc["width"] = manifest.width;
    doc["height"] = manifest.height;
  }
  doc["frames"] = json::array();
  for (const auto& f : manifest.frames) doc["frames"].push_back({{"path", f.path.generic_string()}, {"t", f.t}});
  return doc.dump(2) + "\n";
}

}  // namespace thermo
