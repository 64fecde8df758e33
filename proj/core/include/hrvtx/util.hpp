#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hrvtx {

// Shortest decimal string that round-trips to the same double. Integral
// values get a trailing ".0" stripped off by to_chars already ("42"), which
// is what we want in CSV and JSON artifacts.
std::string format_double(double v);

// Strict double parse of the whole token; throws ParseError on leftovers.
// `what` names the field in the error message.
double parse_double(std::string_view token, std::string_view what);
long parse_long(std::string_view token, std::string_view what);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
// Splits on runs of spaces and tabs, skipping empty tokens.
std::vector<std::string_view> split_ws(std::string_view s);

// FNV-1a, 64-bit. Used for config fingerprints and artifact digests; not a
// cryptographic hash and not meant to be one.
std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace hrvtx
