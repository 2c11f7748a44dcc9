#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tabmath {

std::string read_file(const std::filesystem::path& path);

/// Writes atomically enough for our purposes: to `path.tmp`, then rename.
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Lowercase hex SHA-256 of `data` (OpenSSL EVP).
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// RFC 4180 field quoting: quotes only when the field contains a comma,
/// quote, CR or LF.
std::string csv_escape(std::string_view field);

/// Splits CSV text into records. Accepts LF or CRLF line endings and quoted
/// fields; a trailing newline does not produce an empty record.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

/// Number of UTF-8 code points.
std::size_t utf8_length(std::string_view s);

}  // namespace tabmath
