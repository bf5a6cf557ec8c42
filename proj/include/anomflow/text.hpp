#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace anomflow::text {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

/// Whole-string double parse; nullopt-like failure reported via `ok`.
bool parse_double(std::string_view text, double& out);
bool parse_int64(std::string_view text, long long& out);

std::string_view trim(std::string_view s);

/// Splits on '\n', stripping a trailing '\r' from each line.
std::vector<std::string_view> split_lines(std::string_view raw);
std::vector<std::string_view> split(std::string_view line, char sep);

}  // namespace anomflow::text
