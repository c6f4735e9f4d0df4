#pragma once

#include <filesystem>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hydrobalance {

/// Decimal with 12 significant digits ("%.12g"); the only float format used in output files.
std::string fmt12(double value);

/// Comma-delimited writer with a header row and '\n' line endings.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header);
  explicit CsvWriter(std::ostream& out, std::initializer_list<std::string_view> header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(std::string_view v);
  void end_row();

 private:
  void write_header(std::initializer_list<std::string_view> header);

  std::ostream* out_;
  std::ostream* owned_ = nullptr;
  bool first_ = true;
};

/// Comma-separated list of reals ("1,5,10").
std::vector<double> parse_times(std::string_view text);

}  // namespace hydrobalance
