#pragma once

// Minimal NPY v1.0 codec: 2-D, C-order, little-endian float32/float64.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace thermo::npy {

enum class DType { Float32, Float64 };

struct Array2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  DType dtype = DType::Float64;
  std::vector<double> values;  // row-major, rows * cols
};

// Throws FormatError for a bad magic/header/payload size and
// UnsupportedError for other versions, dtypes, Fortran order, or non-2-D shapes.
Array2D decode(std::span<const std::byte> bytes);

// float32 encoding narrows each value with a static_cast.
std::vector<std::byte> encode(std::size_t rows, std::size_t cols, std::span<const double> values,
                              DType dtype);

}  // namespace thermo::npy
