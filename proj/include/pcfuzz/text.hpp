#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pcfuzz::text {

// 17 significant digits: parses back to the identical double.
std::string format_double(double value);
// Short human-oriented rendering for reports.
std::string format_fixed(double value, int decimals);

double parse_double(std::string_view s);
std::size_t parse_size(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace pcfuzz::text
