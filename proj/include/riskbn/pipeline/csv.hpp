#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace riskbn {

// Minimal RFC 4180 reader/writer: comma separated, double-quote escaping,
// LF or CRLF line endings. The first record is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws ParseError when the column is absent.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
std::string write_csv(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows);

}  // namespace riskbn
