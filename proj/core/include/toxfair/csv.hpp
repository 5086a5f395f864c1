#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace toxfair {

/// Streaming RFC-4180 reader: comma separated, double-quote quoting with ""
/// escapes, quoted fields may span lines, CRLF or LF record ends.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Next record, or nullopt at end of input. Throws DataError on an
  /// unterminated quoted field.
  std::optional<std::vector<std::string>> next();

  /// 1-based count of records returned so far.
  std::size_t records_read() const noexcept { return records_; }

 private:
  std::istream& in_;
  std::size_t records_ = 0;
};

/// Header lookup: column name to field position.
class CsvHeader {
 public:
  CsvHeader() = default;
  explicit CsvHeader(std::vector<std::string> names);

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws SchemaError naming the column when absent.
  std::size_t require(std::string_view name) const;
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
};

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace toxfair
