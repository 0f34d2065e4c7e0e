#pragma once

#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace picce {

/// Fixed-column CSV file. Throws std::runtime_error if the file cannot be opened.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> header);

  void row(const std::vector<std::string>& cells);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::size_t columns_;
  std::ofstream out_;
};

/// Shortest round-trippable text for a double ("%.17g" trimmed to what is needed).
std::string format_double(double x);

}  // namespace picce
