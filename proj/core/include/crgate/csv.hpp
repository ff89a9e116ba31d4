#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crgate::csv {

using Row = std::vector<std::string>;

/// RFC 4180 writer: CRLF line endings, fields quoted when they contain a
/// comma, quote, CR or LF.
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void row(const Row& fields);

 private:
  std::ostream& out_;
};

std::string quote(const std::string& field);

/// Parses RFC 4180 text (CRLF or LF line endings).
std::vector<Row> parse(std::istream& in);

/// Shortest round-tripping decimal form of a double.
std::string number(double v);

}  // namespace crgate::csv
