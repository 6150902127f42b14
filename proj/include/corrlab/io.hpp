#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace corrlab::io {

// P5 (binary) PGM, maxval 255; pixels in [0,1] are quantized to bytes.
void write_pgm(const std::filesystem::path& path, int width, int height,
               std::span<const double> pixels);

// FNV-1a 64-bit over a byte view; stable fingerprint for goldens and config
// hashes.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::uint64_t fnv1a64(const std::string& text);
std::string to_hex(std::uint64_t value);

// Hash of a double buffer's exact bit patterns.
std::uint64_t hash_doubles(std::span<const double> values);

// Append one line (newline added) and flush.
void append_line(const std::filesystem::path& path, const std::string& line);

// All lines of a text file (final unterminated line included).
std::vector<std::string> read_lines(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace corrlab::io
