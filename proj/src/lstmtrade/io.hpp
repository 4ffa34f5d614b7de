#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace lstmtrade {

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

// Strict decimal parse; rejects trailing garbage, empty text, and "null"/"nan".
std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

std::vector<std::string_view> split_csv_line(std::string_view line);
std::string_view trim(std::string_view text);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// FNV-1a, 64 bit. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

// SplitMix64 finaliser; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

using Rng = std::mt19937_64;

// Uniform in [0, 1) from the top 53 bits, identical on every standard library.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace lstmtrade
