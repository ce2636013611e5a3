#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace phenopat {

std::string read_file(const std::filesystem::path& path);

// Writes via a sibling temporary file and rename, creating parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string sha256_hex(std::string_view bytes);

// Shortest round-trippable decimal form of a double ("%.17g").
std::string format_double(double value);
std::string format_fixed(double value, int decimals);

// Runs body(0..count-1) on up to `jobs` threads. Exceptions propagate from the
// lowest failing index.
void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& body);

}  // namespace phenopat
