#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace pheno {

std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Fixed 17-significant-digit decimal rendering used by every CSV writer.
std::string format_real(double value);

}  // namespace pheno
