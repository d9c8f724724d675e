#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace drugrec::io {

// Reads a whole file; throws IoError naming the path on failure.
std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over the target, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace drugrec::io
