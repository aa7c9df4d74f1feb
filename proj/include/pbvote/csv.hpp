#pragma once

#include <istream>
#include <string>
#include <vector>

namespace pbvote::csv {

// RFC-4180-ish: quoted fields may contain commas, quotes ("") and newlines.
std::vector<std::string> split_line(const std::string& line);

// Reads all records. Handles CRLF and quoted embedded newlines. Blank lines skipped.
std::vector<std::vector<std::string>> read_records(std::istream& in);

std::string escape_field(const std::string& field);
std::string join_row(const std::vector<std::string>& fields);

}  // namespace pbvote::csv
