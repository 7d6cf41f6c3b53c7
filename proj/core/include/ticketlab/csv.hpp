#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ticketlab {

/// Shortest decimal text that parses back to the same double ('.' decimal).
std::string format_double(double v);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

/// A CSV report with a fixed header. Rows are rendered with LF line endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& operator<<(const std::string& v);
    Row& operator<<(const char* v) { return *this << std::string(v); }
    Row& operator<<(double v);
    Row& operator<<(bool v);
    template <std::integral T>
    Row& operator<<(T v) {
      return *this << std::to_string(v);
    }

   private:
    friend class CsvTable;
    explicit Row(std::vector<std::string>& cells) : cells_(cells) {}
    std::vector<std::string>& cells_;
  };

  /// Starts a new row; throws ShapeError from str() if its width differs from the header.
  Row row();

  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Parses CSV text (quoted fields allowed) into rows of fields.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Writes `content` to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file_text(const std::filesystem::path& path);

}  // namespace ticketlab
