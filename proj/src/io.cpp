#include "corrlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace corrlab::io {

void write_pgm(const std::filesystem::path& path, int width, int height,
               std::span<const double> pixels) {
    if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw std::domain_error("write_pgm: pixel count does not match dimensions");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path.string());
    out << "P5\n" << width << " " << height << "\n255\n";
    std::vector<unsigned char> bytes(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const double clamped = std::clamp(pixels[i], 0.0, 1.0);
        bytes[i] = static_cast<unsigned char>(std::lround(clamped * 255.0));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write_pgm: write failed for " + path.string());
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        hash ^= b;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::uint64_t fnv1a64(const std::string& text) {
    return fnv1a64({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

std::string to_hex(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

std::uint64_t hash_doubles(std::span<const double> values) {
    return fnv1a64({reinterpret_cast<const unsigned char*>(values.data()),
                    values.size() * sizeof(double)});
}

void append_line(const std::filesystem::path& path, const std::string& line) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("append_line: cannot open " + path.string());
    out << line << '\n';
    out.flush();
    if (!out) throw std::runtime_error("append_line: write failed for " + path.string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_lines: cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_text: cannot open " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write_text: write failed for " + path.string());
}

}  // namespace corrlab::io
