#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hfrisk::text {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Whole-string parse; nullopt on trailing junk or empty input.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string_view trim(std::string_view s);

/// Splits one CSV record on commas. Quoting is not supported; none of the
/// cohort formats need it.
std::vector<std::string_view> split(std::string_view line, char sep = ',');

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace hfrisk::text
