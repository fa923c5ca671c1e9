#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace hetreg {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);

/// Locale-independent strict double parse; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view s);

std::optional<std::int64_t> parse_int(std::string_view s);
std::optional<std::uint64_t> parse_u64(std::string_view s);

std::string_view trim(std::string_view s);

std::string to_hex(std::uint64_t v);
std::optional<std::uint64_t> from_hex(std::string_view s);

}  // namespace hetreg
