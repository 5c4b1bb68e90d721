#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "valcs/error.hpp"
#include "valcs/frame.hpp"
#include "valcs/pgm.hpp"

namespace valcs {

enum class PixelFormat {
  kYuv420,  // planar I420; chroma planes are skipped on read
  kY8,      // luminance only
};

struct VideoGeometry {
  std::size_t width = 352;
  std::size_t height = 288;
  PixelFormat format = PixelFormat::kYuv420;

  std::size_t luma_bytes() const { return width * height; }
  std::size_t frame_bytes() const {
    if (format == PixelFormat::kY8) return luma_bytes();
    return luma_bytes() + 2 * (((width + 1) / 2) * ((height + 1) / 2));
  }
};

namespace detail {

inline bool starts_with(const std::vector<std::uint8_t>& bytes, const std::string& prefix) {
  return bytes.size() >= prefix.size() && std::equal(prefix.begin(), prefix.end(), bytes.begin());
}

// YUV4MPEG2 container. Only the W, H and C header tags are interpreted;
// C420* and Cmono are accepted.
inline std::vector<Frame> read_y4m(const std::vector<std::uint8_t>& bytes, std::optional<std::size_t> max_frames) {
  auto fail = [](const std::string& why) { return Error(ErrorCode::kMalformedStream, "Y4M: " + why); };
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const std::size_t start = pos;
    while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    if (pos >= bytes.size()) throw fail("unterminated header line");
    return std::string(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                       bytes.begin() + static_cast<std::ptrdiff_t>(pos++));
  };
  std::istringstream header(next_line());
  std::string tag;
  header >> tag;
  VideoGeometry g{0, 0, PixelFormat::kYuv420};
  while (header >> tag) {
    if (tag[0] == 'W') g.width = std::stoul(tag.substr(1));
    else if (tag[0] == 'H') g.height = std::stoul(tag.substr(1));
    else if (tag[0] == 'C') {
      if (tag.rfind("Cmono", 0) == 0) g.format = PixelFormat::kY8;
      else if (tag.rfind("C420", 0) != 0) throw fail("unsupported chroma format " + tag);
    }
  }
  if (g.width == 0 || g.height == 0) throw fail("missing geometry");
  std::vector<Frame> frames;
  while (pos < bytes.size() && (!max_frames || frames.size() < *max_frames)) {
    const std::string marker = next_line();
    if (marker.rfind("FRAME", 0) != 0) throw fail("expected FRAME marker");
    if (bytes.size() - pos < g.frame_bytes()) {
      throw Error(ErrorCode::kTruncated, "Y4M frame " + std::to_string(frames.size()) + " truncated");
    }
    frames.push_back(from_u8(g.height, g.width, std::span<const std::uint8_t>(bytes.data() + pos, g.luma_bytes())));
    pos += g.frame_bytes();
  }
  return frames;
}

}  // namespace detail

// Reads the luminance planes of a raw planar file (4:2:0 or Y-only) or of a
// Y4M file, which is recognised by its signature and carries its own geometry.
inline std::vector<Frame> read_y_sequence(const std::vector<std::uint8_t>& bytes, const VideoGeometry& geometry,
                                          std::optional<std::size_t> max_frames = std::nullopt) {
  if (bytes.empty()) throw Error(ErrorCode::kEmptyInput, "input video is empty");
  if (detail::starts_with(bytes, "YUV4MPEG2")) return detail::read_y4m(bytes, max_frames);
  if (geometry.width == 0 || geometry.height == 0) throw Error(ErrorCode::kInvalidArgument, "zero frame geometry");
  const std::size_t frame_bytes = geometry.frame_bytes();
  if (bytes.size() % frame_bytes != 0) {
    throw Error(ErrorCode::kTruncated, "file size " + std::to_string(bytes.size()) +
                                           " is not a multiple of the frame size " + std::to_string(frame_bytes));
  }
  std::size_t count = bytes.size() / frame_bytes;
  if (max_frames) count = std::min(count, *max_frames);
  std::vector<Frame> frames;
  frames.reserve(count);
  for (std::size_t f = 0; f < count; ++f) {
    frames.push_back(from_u8(geometry.height, geometry.width,
                             std::span<const std::uint8_t>(bytes.data() + f * frame_bytes, geometry.luma_bytes())));
  }
  return frames;
}

inline std::vector<Frame> read_y_sequence(const std::filesystem::path& path, const VideoGeometry& geometry,
                                          std::optional<std::size_t> max_frames = std::nullopt) {
  return read_y_sequence(read_file_bytes(path), geometry, max_frames);
}

// Raw planar output; for 4:2:0 the chroma planes are filled with 128.
inline std::vector<std::uint8_t> encode_y_sequence(const std::vector<Frame>& frames, PixelFormat format) {
  std::vector<std::uint8_t> out;
  for (const auto& f : frames) {
    const auto luma = to_u8(f);
    out.insert(out.end(), luma.begin(), luma.end());
    if (format == PixelFormat::kYuv420) {
      out.insert(out.end(), 2 * (((f.width() + 1) / 2) * ((f.height() + 1) / 2)), std::uint8_t{128});
    }
  }
  return out;
}

inline void write_y_sequence(const std::filesystem::path& path, const std::vector<Frame>& frames,
                             PixelFormat format) {
  write_file_bytes(path, encode_y_sequence(frames, format));
}

}  // namespace valcs
