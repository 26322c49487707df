#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ritherm {

inline constexpr const char* kCsvSchemaVersion = "ritherm-csv v1";

// Shortest round-trip decimal; NaN becomes an empty cell, infinities "inf" / "-inf".
std::string format_number(double v);
std::string format_number(std::uint64_t v);

// Quotes a cell only when it contains a comma, quote or newline.
std::string csv_escape(std::string_view cell);

class CsvTable {
 public:
  CsvTable(std::string schema, std::vector<std::string> columns);

  const std::vector<std::string>& columns() const { return columns_; }
  const std::string& schema() const { return schema_; }
  std::size_t size() const { return rows_.size(); }

  // Cells are already formatted; the count must match the columns.
  void add_row(std::vector<std::string> cells);
  const std::vector<std::string>& row_line(std::size_t i) const { return rows_[i]; }
  std::string line(std::size_t i) const;
  std::string str() const;

 private:
  std::string schema_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

std::uint64_t fnv1a64(std::string_view data);

void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

// JSON numbers cannot hold infinities; they are written as strings.
nlohmann::json json_number(double v);
double json_to_double(const nlohmann::json& j, const std::string& where);

}  // namespace ritherm
