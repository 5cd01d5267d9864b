#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lhspline::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and
/// doubled quotes ("").
std::vector<std::string> split_record(std::string_view line);

/// Fixed 17-significant-digit text ("nan", "inf", "-inf" for non-finite).
std::string number(double value);

/// Minimal buffered CSV writer. Rows are joined with ',' and '\n'.
class Writer {
 public:
  explicit Writer(std::vector<std::string> header);

  void row(const std::vector<std::string>& fields);
  const std::string& text() const { return text_; }

  /// Writes the buffered text; throws DataError if the file cannot be written.
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t columns_;
  std::string text_;
};

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace lhspline::csv
