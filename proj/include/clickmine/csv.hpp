#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace clickmine {

// Minimal CSV support for the artifact's flat tables. Fields containing
// commas, quotes or newlines are double-quoted on write; quoted fields are
// unescaped on read.
std::string csv_escape(const std::string& field);
std::vector<std::string> csv_split(const std::string& line);

class CsvWriter {
public:
  void row(const std::vector<std::string>& fields);
  const std::string& str() const { return buf_; }

private:
  std::string buf_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws when the column is missing.
  std::size_t col(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

// Stable numeric formatting ("%.10g") so repeated runs emit identical bytes.
std::string fmt_num(double x);
std::string fmt_int(long long x);

// Writes via a temp file + rename so partial output never lands on disk.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace clickmine
