#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace pedsim::detail {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with_ci(std::string_view text, std::string_view prefix);

// Shortest decimal text that round-trips the value.
std::string format_number(double value);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary and renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed = 14695981039346656037ull);

}  // namespace pedsim::detail
