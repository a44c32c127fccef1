#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vsdr {

namespace fs = std::filesystem;

// Writes via a temp file in the same directory plus an atomic rename, so a
// crash or concurrent writer never leaves a partial file at `path`.
void atomic_write_file(const fs::path& path, const std::string& content);

std::string read_file(const fs::path& path);  // throws if missing
bool file_exists(const fs::path& path);
void ensure_dir(const fs::path& dir);

// full round-trip precision (17 significant digits)
std::string fmt_double(double x);

std::vector<std::string> split_ws(const std::string& line);
std::string trim(const std::string& s);

}  // namespace vsdr
