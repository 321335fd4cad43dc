#include "thermo/npy.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <string_view>

#include "thermo/errors.hpp"

namespace thermo::npy {

namespace {

constexpr std::string_view kMagic = "\x93NUMPY";
constexpr std::size_t kPreamble = 10;  // magic(6) + version(2) + header_len(2)

std::uint64_t load_le(const std::byte* p, std::size_t n) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v |= std::uint64_t(std::to_integer<std::uint8_t>(p[i])) << (8 * i);
  return v;
}

void store_le(std::byte* p, std::uint64_t v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) p[i] = std::byte((v >> (8 * i)) & 0xFF);
}

// Returns the text following "'key':" up to (not including) the next top-level ',' or '}'.
std::string_view dict_value(std::string_view header, std::string_view key) {
  std::string quoted = "'" + std::string(key) + "'";
  auto pos = header.find(quoted);
  if (pos == std::string_view::npos) throw FormatError("NPY header missing key " + quoted);
  pos = header.find(':', pos + quoted.size());
  if (pos == std::string_view::npos) throw FormatError("NPY header malformed near " + quoted);
  ++pos;
  while (pos < header.size() && std::isspace(static_cast<unsigned char>(header[pos]))) ++pos;
  int depth = 0;
  std::size_t end = pos;
  for (; end < header.size(); ++end) {
    char c = header[end];
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth == 0 && (c == ',' || c == '}')) break;
  }
  if (end >= header.size()) throw FormatError("NPY header unterminated near " + quoted);
  auto value = header.substr(pos, end - pos);
  while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) value.remove_suffix(1);
  return value;
}

std::vector<std::size_t> parse_shape(std::string_view text) {
  if (text.size() < 2 || text.front() != '(' || text.back() != ')')
    throw FormatError("NPY shape is not a tuple: " + std::string(text));
  std::vector<std::size_t> dims;
  std::size_t i = 1;
  while (i < text.size() - 1) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      ++i;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw FormatError("NPY shape has a non-integer entry: " + std::string(text));
    std::size_t v = 0;
    while (i < text.size() - 1 && std::isdigit(static_cast<unsigned char>(text[i]))) {
      v = v * 10 + std::size_t(text[i] - '0');
      ++i;
    }
    dims.push_back(v);
  }
  return dims;
}

}  // namespace

Array2D decode(std::span<const std::byte> bytes) {
  if (bytes.size() < kPreamble ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
    throw FormatError("missing NPY magic");
  auto major = std::to_integer<int>(bytes[6]);
  auto minor = std::to_integer<int>(bytes[7]);
  if (major != 1 || minor != 0)
    throw UnsupportedError("NPY version " + std::to_string(major) + "." + std::to_string(minor) +
                           " (only 1.0 supported)");
  const std::size_t header_len = load_le(bytes.data() + 8, 2);
  if (bytes.size() < kPreamble + header_len) throw FormatError("NPY header truncated");
  std::string_view header(reinterpret_cast<const char*>(bytes.data() + kPreamble), header_len);
  if (header.find('{') == std::string_view::npos) throw FormatError("NPY header is not a dict");

  auto descr = dict_value(header, "descr");
  auto fortran = dict_value(header, "fortran_order");
  auto shape = parse_shape(dict_value(header, "shape"));

  Array2D out;
  std::size_t item = 0;
  if (descr == "'<f4'") {
    out.dtype = DType::Float32;
    item = 4;
  } else if (descr == "'<f8'") {
    out.dtype = DType::Float64;
    item = 8;
  } else {
    throw UnsupportedError("NPY dtype " + std::string(descr) + " (need '<f4' or '<f8')");
  }
  if (fortran == "True") throw UnsupportedError("NPY Fortran order is not supported");
  if (fortran != "False") throw FormatError("NPY fortran_order is not a bool");
  if (shape.size() != 2)
    throw UnsupportedError("NPY array has " + std::to_string(shape.size()) + " dimensions (need 2)");

  out.rows = shape[0];
  out.cols = shape[1];
  const std::size_t count = out.rows * out.cols;
  const std::size_t offset = kPreamble + header_len;
  if (bytes.size() - offset < count * item)
    throw FormatError("NPY payload holds " + std::to_string((bytes.size() - offset) / item) +
                      " values, header declares " + std::to_string(count));

  out.values.resize(count);
  const std::byte* p = bytes.data() + offset;
  for (std::size_t i = 0; i < count; ++i, p += item) {
    if (item == 4)
      out.values[i] = std::bit_cast<float>(static_cast<std::uint32_t>(load_le(p, 4)));
    else
      out.values[i] = std::bit_cast<double>(load_le(p, 8));
  }
  return out;
}

std::vector<std::byte> encode(std::size_t rows, std::size_t cols, std::span<const double> values,
                              DType dtype) {
  if (values.size() != rows * cols) throw ArgumentError("NPY encode: value count != rows * cols");
  const std::size_t item = dtype == DType::Float32 ? 4 : 8;
  std::string header = "{'descr': '" + std::string(dtype == DType::Float32 ? "<f4" : "<f8") +
                       "', 'fortran_order': False, 'shape': (" + std::to_string(rows) + ", " +
                       std::to_string(cols) + "), }";
  // Pad so the payload starts on a 64-byte boundary; header ends with '\n'.
  const std::size_t unpadded = kPreamble + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');

  std::vector<std::byte> out(kPreamble + header.size() + values.size() * item);
  std::memcpy(out.data(), kMagic.data(), kMagic.size());
  out[6] = std::byte{1};
  out[7] = std::byte{0};
  store_le(out.data() + 8, header.size(), 2);
  std::memcpy(out.data() + kPreamble, header.data(), header.size());
  std::byte* p = out.data() + kPreamble + header.size();
  for (double v : values) {
    if (dtype == DType::Float32)
      store_le(p, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
    else
      store_le(p, std::bit_cast<std::uint64_t>(v), 8);
    p += item;
  }
  return out;
}

}  // namespace thermo::npy
