#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rectx {

// Shortest decimal form that parses back to the identical double.
std::string format_real(double value);

// Fixed-precision form for metrics in reports.
std::string format_metric(double value);

// Strict parse: the whole token must be consumed. Accepts "inf"/"nan" so the
// caller can report non-finite values separately from garbage.
std::optional<double> parse_real(std::string_view token);
std::optional<long long> parse_integer(std::string_view token);
std::optional<std::uint64_t> parse_unsigned(std::string_view token);

std::string_view trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char delimiter);
std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace rectx
