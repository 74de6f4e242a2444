#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace scoremerge {

/// Shortest decimal string that parses back to exactly v. Locale-free.
std::string format_double(double v);

/// Locale-free strict parse of a full decimal/float token.
double parse_double(std::string_view s);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Quote a CSV field only when it needs it (comma, quote, newline).
std::string csv_field(const std::string& s);

/// RFC-4180-ish parse: quoted fields, doubled quotes, \n or \r\n rows.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

/// Backslash-escape for embedding in a JSON string literal.
std::string json_escape(const std::string& s);

/// JSON number token: full-precision decimal, or null for non-finite.
std::string json_number(double v);

}  // namespace scoremerge
