#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace statefusion {

std::string read_text_file(const std::filesystem::path& path);

/// Writes the file, creating parent directories as needed.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

/// 1-based line number of the byte at `offset`.
std::size_t line_at_offset(std::string_view text, std::size_t offset);

}  // namespace statefusion
