#pragma once

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "valcs/error.hpp"
#include "valcs/frame.hpp"

namespace valcs {

// Binary 8-bit PGM (P5). Samples are clamped and rounded on write.
inline std::vector<std::uint8_t> encode_pgm(const Frame& frame) {
  const std::string header =
      "P5\n" + std::to_string(frame.width()) + " " + std::to_string(frame.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const auto pixels = to_u8(frame);
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

inline Frame decode_pgm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto fail = [](const std::string& why) -> Error { return Error(ErrorCode::kMalformedStream, "PGM: " + why); };
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> std::size_t {
    skip_space_and_comments();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw fail("expected integer in header");
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (1u << 24)) throw fail("header value out of range");
      ++pos;
    }
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw fail("not a binary PGM (P5)");
  pos = 2;
  const std::size_t width = read_int();
  const std::size_t height = read_int();
  const std::size_t maxval = read_int();
  if (maxval == 0 || maxval > 255) throw fail("only 8-bit PGM is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw fail("missing separator after header");
  ++pos;
  if (bytes.size() - pos < width * height) throw fail("pixel data truncated");
  return from_u8(height, width, std::span<const std::uint8_t>(bytes.data() + pos, width * height));
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

inline void write_pgm(const std::filesystem::path& path, const Frame& frame) {
  write_file_bytes(path, encode_pgm(frame));
}

inline Frame read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file_bytes(path)); }

}  // namespace valcs
