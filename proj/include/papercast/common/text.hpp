#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace papercast::text {

std::vector<std::string> split_words(std::string_view s);
std::size_t count_words(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool contains_ci(std::string_view haystack, std::string_view needle);
// Collapses runs of whitespace into single spaces and trims.
std::string normalize_space(std::string_view s);
// Lowercase alnum/underscore slug, e.g. for ids and file names.
std::string slugify(std::string_view s);

}  // namespace papercast::text
