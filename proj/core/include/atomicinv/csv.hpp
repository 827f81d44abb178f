#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace atomicinv {

/// File-system failure; the message carries the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 17 significant digits, '.' decimal separator, independent of locale.
std::string format_double(double value);

/// RFC-4180 field quoting (quotes only when needed).
std::string csv_field(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

/// RFC-4180 parser: quoted fields, doubled quotes, CRLF or LF line ends.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Writes through a temporary sibling file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace atomicinv
