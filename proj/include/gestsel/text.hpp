#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gestsel::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string collapse_whitespace(std::string_view s);

/// Lowercase, trim and collapse internal whitespace.
std::string normalize_label(std::string_view s);

std::vector<std::string> split_words(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool contains(std::string_view haystack, std::string_view needle);
bool starts_with(std::string_view s, std::string_view prefix);

/// Filesystem-safe single path component.
std::string sanitize_component(std::string_view s);

std::string sha256_hex(std::string_view bytes);

/// Round half-up to one decimal place of a percentage, as text ("43.2").
std::string percent_1dp(double fraction);
std::string fixed_3dp(double value);

}  // namespace gestsel::text
