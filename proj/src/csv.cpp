#include "hydrobalance/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace hydrobalance {

std::string fmt12(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header) {
  auto* file = new std::ofstream(path, std::ios::binary);
  if (!*file) {
    delete file;
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  owned_ = out_ = file;
  write_header(header);
}

CsvWriter::CsvWriter(std::ostream& out, std::initializer_list<std::string_view> header) : out_(&out) {
  write_header(header);
}

CsvWriter::~CsvWriter() { delete owned_; }

void CsvWriter::write_header(std::initializer_list<std::string_view> header) {
  for (auto h : header) cell(h);
  end_row();
}

CsvWriter& CsvWriter::cell(std::string_view v) {
  if (!first_) *out_ << ',';
  *out_ << v;
  first_ = false;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(fmt12(v))); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::string_view(std::to_string(v))); }

void CsvWriter::end_row() {
  *out_ << '\n';
  first_ = true;
}

std::vector<double> parse_times(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item(text.substr(pos, comma - pos));
    if (!item.empty()) {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument("bad number in time list: " + item);
      out.push_back(v);
    }
    pos = comma + 1;
  }
  return out;
}

}  // namespace hydrobalance
