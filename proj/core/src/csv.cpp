#include "toxfair/csv.hpp"

#include <istream>
#include <ostream>

#include "toxfair/error.hpp"

namespace toxfair {

std::optional<std::vector<std::string>> CsvReader::next() {
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  bool field_was_quoted = false;

  for (int ch = in_.get(); ch != std::char_traits<char>::eof(); ch = in_.get()) {
    any = true;
    const char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty() && !field_was_quoted) {
      in_quotes = true;
      field_was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else if (c == '\r' && in_.peek() == '\n') {
      // CRLF: let the LF close the record.
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      ++records_;
      return fields;
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) {
    throw RowError(records_, "unterminated quoted field at end of input");
  }
  if (!any) return std::nullopt;
  fields.push_back(std::move(field));
  ++records_;
  return fields;
}

CsvHeader::CsvHeader(std::vector<std::string> names) : names_(std::move(names)) {
  // Tolerate a UTF-8 byte-order mark on the first column.
  if (!names_.empty() && names_.front().rfind("\xEF\xBB\xBF", 0) == 0) names_.front().erase(0, 3);
}

std::optional<std::size_t> CsvHeader::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t CsvHeader::require(std::string_view name) const {
  if (auto pos = find(name)) return *pos;
  throw SchemaError(std::string(name));
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

}  // namespace toxfair
