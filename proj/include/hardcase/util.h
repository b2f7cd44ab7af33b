#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace hardcase {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Lowercase, typographic apostrophes to ASCII, whitespace runs collapsed to a
// single space. Cue phrases are matched against this form.
std::string normalize_for_match(std::string_view s);

std::uint32_t crc32(std::string_view data);
std::uint64_t fnv1a64(std::string_view data);

std::string base64_encode(std::string_view data);

// Shortest decimal form at `digits` significant digits ("%.{digits}g").
std::string format_sig(double value, int digits);

// Value snapped to `digits` significant digits, for canonical serialization.
double round_sig(double value, int digits);

std::string utc_now_iso8601();

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

} // namespace hardcase
