#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace drugrec::csv {

using Row = std::vector<std::string>;

// RFC 4180 style reader: comma separated, double-quote quoting with "" as an
// escaped quote, quoted fields may span lines. A trailing CR is dropped.
// Returns false at end of input.
bool read_row(std::istream& in, Row& row);

std::vector<Row> read_all(std::istream& in);

// Quotes a field only when it contains a separator, quote, or newline.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const Row& row);

// Splits a multi-valued cell on ';' and trims whitespace; empty parts dropped.
std::vector<std::string> split_multi(std::string_view cell);

std::string join_multi(const std::vector<std::string>& values);

std::string trim(std::string_view s);

}  // namespace drugrec::csv
