#ifndef LEXALIGN_UTIL_HPP
#define LEXALIGN_UTIL_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lexalign {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view line, char delim);

/// Formats with printf "%.<digits>g"; NaN prints as "nan".
std::string format_g(double v, int digits);

/// Strict double parse of a whole token; ok=false on trailing garbage or empty.
double parse_number(std::string_view text, bool& ok);

std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

}

#endif
