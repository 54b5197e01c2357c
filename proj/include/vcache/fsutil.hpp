#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace vcache {

// Whole-file read; throws Io on failure.
std::string read_file(const std::filesystem::path& path);

// Write-to-temp then rename, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace vcache
