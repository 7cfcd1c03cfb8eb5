#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace drivelab {

struct CsvRow {
  std::size_t line = 0;  // 1-based line number in the file
  std::vector<std::string> fields;
};

/// Header plus data rows of a comma-separated file. Fields may be quoted
/// with '"' ("" escapes a quote); surrounding blanks are trimmed. Blank lines
/// are dropped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<CsvRow> rows;

  std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable load_csv(const std::filesystem::path& path);

/// Strict full-field number parse ('.' decimal).
std::optional<double> parse_number(std::string_view s);

}  // namespace drivelab
