#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace commitcl::csv {

using Row = std::vector<std::string>;

/// Parses RFC 4180 text: comma separators, double-quoted fields with "" escapes,
/// CRLF or LF line ends, embedded newlines inside quotes. A trailing newline
/// does not produce an empty row.
std::vector<Row> parse(std::string_view text);

/// Quotes a field only when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const Row& row);

} // namespace commitcl::csv
