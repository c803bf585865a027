#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace audioad {

// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

// Fixed-point rendering with `decimals` digits, e.g. 0.968 -> "0.9680".
std::string format_fixed(double v, int decimals);

double parse_double(std::string_view s);

std::vector<std::string> split_csv_line(std::string_view line);

// Splits on '\n', dropping a trailing '\r' and blank lines.
std::vector<std::string> split_lines(std::string_view text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace audioad
