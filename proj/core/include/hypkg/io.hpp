#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hypkg {

// Shortest decimal that round-trips the double (via std::to_chars).
std::string format_double(double value);

// Fixed-point with the given number of fractional digits.
std::string format_fixed(double value, int digits);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::vector<std::string> split(std::string_view text, char sep);
std::string lowercase(std::string_view text);

// Minimal CSV quoting: fields with separators, quotes or newlines get wrapped.
std::string csv_field(std::string_view field);
std::vector<std::string> parse_csv_line(std::string_view line);

std::uint64_t fnv1a64(std::string_view data);
std::string to_hex(std::uint64_t value);
std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace hypkg
