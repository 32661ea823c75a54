#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace causalsem {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

} // namespace causalsem
