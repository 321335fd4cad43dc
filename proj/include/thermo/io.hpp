#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace thermo::io {

// Both throw IoError when the file cannot be opened or read.
std::vector<std::byte> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

// Writes to "<path>.tmp" then renames over path, so readers never observe a
// half-written file. Creates missing parent directories.
void write_atomic(const std::filesystem::path& path, std::span<const std::byte> data);
void write_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace thermo::io
