#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace linkvol {

// Reads a whole file into memory. Files beginning with the gzip magic bytes
// are inflated transparently, so every loader accepts .csv and .csv.gz alike.
std::string read_file_bytes(const std::string& path);

void write_file_bytes(const std::string& path, const std::string& bytes);

// Shortest round-trip decimal form of a double. Used for every numeric cell
// we emit so that dumps re-ingest losslessly and reports are byte-stable.
std::string fmt_double(double v);

// Fixed-precision form for human-facing report cells.
std::string fmt_fixed(double v, int digits);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws naming the column and file if absent.
  std::size_t col(const std::string& name) const;
  std::optional<std::size_t> col_opt(const std::string& name) const;

  std::string source;  // path, used in error messages
};

// RFC-4180-ish parser: quoted fields, embedded commas/quotes/newlines.
CsvTable parse_csv(const std::string& bytes, const std::string& source_name);
CsvTable read_csv(const std::string& path);

class CsvWriter {
 public:
  CsvWriter() = default;
  explicit CsvWriter(const std::vector<std::string>& header) {
    for (const auto& h : header) field(h);
    end_row();
  }

  void field(const std::string& s);
  void field(double v) { field(fmt_double(v)); }
  void field(std::int64_t v) { field(std::to_string(v)); }
  void end_row();
  const std::string& str() const { return out_; }
  void save(const std::string& path) const;

 private:
  std::string out_;
  bool row_open_ = false;
};

}  // namespace linkvol
