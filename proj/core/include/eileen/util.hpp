#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace eileen {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Parses a double written by format_double. Throws FormatError.
double parse_double(std::string_view text);

/// Whole file as bytes. Throws IoError.
std::string read_text_file(std::filesystem::path const& path);

/// Writes to a sibling temporary file and renames it over `path`, creating
/// parent directories. Throws IoError.
void write_text_file(std::filesystem::path const& path, std::string_view text);

}  // namespace eileen
