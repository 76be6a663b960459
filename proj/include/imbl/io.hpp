#pragma once

#include <filesystem>
#include <string>

namespace imbl {

/// Writes via a temp file in the same directory and renames into place, so
/// readers never observe a half-written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// Reads a file, transparently inflating gzip content (1f 8b magic).
std::string read_maybe_gzip(const std::filesystem::path& path);

/// SHA-256 digest as a lowercase hex string.
std::string sha256_hex(const std::string& bytes);

/// Dataset cache root: $IMB_DATA_DIR or ./data.
std::filesystem::path data_dir();

} // namespace imbl
