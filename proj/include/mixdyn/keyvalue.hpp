#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace mixdyn {

/// Flat `key = value` text: one entry per line, `#` starts a comment, keys may
/// be dotted (`gamma.alpha`). Duplicate keys are rejected.
using KeyValueMap = std::map<std::string, std::string>;

KeyValueMap parse_key_values(std::istream& in, const std::string& source_name);
KeyValueMap read_key_value_file(const std::filesystem::path& path);

// Value parsers. All throw ConfigError naming `key` on malformed input.
double parse_real(const std::string& key, const std::string& text);
std::int64_t parse_integer(const std::string& key, const std::string& text);
std::uint64_t parse_unsigned(const std::string& key, const std::string& text);
bool parse_bool(const std::string& key, const std::string& text);
/// Whitespace- or comma-separated reals.
std::vector<double> parse_real_list(const std::string& key, const std::string& text);

/// Shortest decimal text that round-trips to the same double.
std::string format_real(double value);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace mixdyn
