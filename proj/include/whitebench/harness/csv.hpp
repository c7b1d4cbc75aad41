#pragma once
// RFC 4180 tables: comma separated, CRLF or LF line ends, double-quoted
// fields with "" escapes and embedded line breaks.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace wb::csv {

struct Record {
  std::vector<std::string> fields;
  long line = 0;  // 1-based line where the record starts
};

/// Throws ParseError naming the line for an unterminated quote or stray
/// characters after a closing quote.
std::vector<Record> read(std::istream& in, const std::string& source = "<csv>");

std::string quote(const std::string& field);
/// Writes one record terminated by CRLF.
void write_record(std::ostream& out, const std::vector<std::string>& fields);

/// %.17g, or the empty string for NaN.
std::string format_number(double v);

}  // namespace wb::csv
