#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace fmeac {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view token);
long long parse_int(std::string_view token);

// Whitespace-separated tokens of one line.
std::vector<std::string_view> split_tokens(std::string_view line);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace fmeac
