#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pgx {

// A CSV file whose contents are written in full on close. The first line is a
// comment "# config: <json>" holding the effective configuration.
class CsvWriter {
 public:
  CsvWriter(std::filesystem::path path, const std::string& config_json,
            std::vector<std::string> columns);

  CsvWriter& add(const std::string& v);
  CsvWriter& add(double v);
  CsvWriter& add(long long v);
  CsvWriter& add(unsigned long long v);
  CsvWriter& add(int v) { return add(static_cast<long long>(v)); }
  CsvWriter& add(long v) { return add(static_cast<long long>(v)); }
  CsvWriter& add(unsigned long v) { return add(static_cast<unsigned long long>(v)); }
  void end_row();
  void close();

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::string body_;
  std::size_t ncols_;
  std::size_t in_row_ = 0;
  std::size_t row_start_ = 0;

  void discard_row();
};

// Shortest representation that round-trips a double; "nan", "inf", "-inf".
std::string format_double(double v);

struct CsvTable {
  std::string comment;  // leading '#' lines without the marker, newline-joined
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace pgx
