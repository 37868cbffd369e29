#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lgir::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool is_blank(std::string_view s);
std::vector<std::string_view> split_lines(std::string_view s);
/// Lowercases and drops everything except ASCII letters and digits.
std::string normalize_key(std::string_view s);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

}  // namespace lgir::text
