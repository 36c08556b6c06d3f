#pragma once

// Locale-independent helpers for the plain-text formats (mesh, regions, CSV).

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gsr::text {

// Strips a '#' comment and surrounding whitespace.
std::string_view strip_comment(std::string_view line);
std::string_view trim(std::string_view s);

std::vector<std::string_view> split_whitespace(std::string_view line);
std::vector<std::string_view> split_char(std::string_view line, char sep);

// Throw ParseError carrying `context` when the token is not a complete number.
double parse_double(std::string_view token, const std::string& context);
long long parse_int(std::string_view token, const std::string& context);

// Shortest representation that round-trips exactly.
std::string format_double(double v);

// Writes to a sibling temporary file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace gsr::text
