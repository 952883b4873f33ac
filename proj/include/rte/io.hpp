#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rte {

/// Shortest round-trip-safe text for a double: 17 significant digits.
std::string fmt(double x);

/// Writes text to path via a temporary file and rename, so readers never see
/// a partial file.
void write_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t x);

/// One delimited row; fields are joined with a tab.
std::string tsv_row(const std::vector<std::string>& fields);

}  // namespace rte
