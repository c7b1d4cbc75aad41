#include "whitebench/harness/csv.hpp"

#include <cmath>
#include <cstdio>

#include "whitebench/errors.hpp"

namespace wb::csv {

std::vector<Record> read(std::istream& in, const std::string& source) {
  std::vector<Record> out;
  Record rec;
  std::string field;
  long line = 1;
  rec.line = 1;
  bool quoted = false;
  bool after_quote = false;
  bool any = false;  // current record has content
  long quote_line = 0;

  auto end_field = [&] {
    rec.fields.push_back(std::move(field));
    field.clear();
    after_quote = false;
  };
  auto end_record = [&] {
    end_field();
    out.push_back(std::move(rec));
    rec = Record{};
    any = false;
  };

  char c;
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '\r' && in.peek() == '\n') continue;
    if (c == '\n' || c == '\r') {
      if (any || !field.empty()) end_record();
      ++line;
      rec.line = line;
      continue;
    }
    if (c == ',') {
      end_field();
      any = true;
      continue;
    }
    if (after_quote) {
      throw ParseError(source + ": line " + std::to_string(line) + ": unexpected character after closing quote");
    }
    if (c == '"') {
      if (!field.empty()) {
        throw ParseError(source + ": line " + std::to_string(line) + ": quote inside an unquoted field");
      }
      quoted = true;
      quote_line = line;
      any = true;
      continue;
    }
    field.push_back(c);
    any = true;
  }
  if (quoted) throw ParseError(source + ": line " + std::to_string(quote_line) + ": unterminated quoted field");
  if (any || !field.empty() || after_quote) end_record();
  return out;
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string q = "\"";
  for (char c : field) {
    if (c == '"') q.push_back('"');
    q.push_back(c);
  }
  q.push_back('"');
  return q;
}

void write_record(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << quote(fields[i]);
  }
  out << "\r\n";
}

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace wb::csv
