#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace gestsel::io {

/// Throws Error(Io) when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

/// Write to a sibling temporary file, then rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace gestsel::io
