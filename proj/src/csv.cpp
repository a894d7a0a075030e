#include "pgx/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pgx {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

CsvWriter::CsvWriter(std::filesystem::path path, const std::string& config_json,
                     std::vector<std::string> columns)
    : path_(std::move(path)), ncols_(columns.size()) {
  body_ = "# config: " + config_json + "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) body_ += (i ? "," : "") + columns[i];
  body_ += "\n";
}

CsvWriter& CsvWriter::add(const std::string& v) {
  if (v.find_first_of(",\n") != std::string::npos)
    throw std::invalid_argument("CSV field contains a separator: " + v);
  if (in_row_ >= ncols_) {
    discard_row();
    throw std::logic_error("too many fields in CSV row");
  }
  if (in_row_ == 0) row_start_ = body_.size();
  if (in_row_++) body_ += ',';
  body_ += v;
  return *this;
}

CsvWriter& CsvWriter::add(double v) { return add(format_double(v)); }
CsvWriter& CsvWriter::add(long long v) { return add(std::to_string(v)); }
CsvWriter& CsvWriter::add(unsigned long long v) { return add(std::to_string(v)); }

void CsvWriter::end_row() {
  if (in_row_ != ncols_) {
    discard_row();
    throw std::logic_error("CSV row has the wrong number of fields");
  }
  body_ += '\n';
  in_row_ = 0;
}

void CsvWriter::discard_row() {
  if (in_row_) body_.resize(row_start_);
  in_row_ = 0;
}

void CsvWriter::close() {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream os(path_, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path_.string() + " for writing");
  os << body_;
  if (!os) throw std::runtime_error("failed writing " + path_.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header && !line.empty() && line[0] == '#') {
      std::string text = line.substr(1);
      if (!text.empty() && text[0] == ' ') text.erase(0, 1);
      if (!t.comment.empty()) t.comment += '\n';
      t.comment += text;
      continue;
    }
    if (line.empty()) continue;
    auto fields = split(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw std::runtime_error(path.string() + ": row has " + std::to_string(fields.size()) +
                               " fields, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) throw std::runtime_error(path.string() + " has no header row");
  return t;
}

}  // namespace pgx
