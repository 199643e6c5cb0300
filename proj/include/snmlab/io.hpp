#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace snmlab {

// Shortest decimal string that round-trips to the same double ("nan"/"inf"
// spelled literally). All file formats use this so outputs are byte-stable.
std::string format_double(double value);

std::string format_int(std::int64_t value);
std::string format_u64(std::uint64_t value);

// Strict parsers: the whole token must be consumed.
bool parse_double(const std::string& token, double& out);
bool parse_i64(const std::string& token, std::int64_t& out);
bool parse_u64(const std::string& token, std::uint64_t& out);

std::vector<std::string> split_whitespace(const std::string& line);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace snmlab
