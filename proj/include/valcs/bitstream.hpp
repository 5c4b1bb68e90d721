#pragma once

// Bitstream layout, all multi-byte fields little-endian:
//
//   header (24 bytes)
//     "VALC"            4 bytes magic
//     version           u8  (1)
//     width, height     u16, u16
//     block size        u8
//     GOP size          u8
//     key ratio         f32
//     non-key ratio     f32
//     allocation        u8  (0 = THI, 1 = MDD, 2 = FIXED)
//     frame count       u32
//   per frame
//     kind              u8  (0 = key, 1 = non-key)
//     counts            u16 x n_B, raster block order
//     values            f32 x sum(counts)

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "valcs/error.hpp"
#include "valcs/pgm.hpp"
#include "valcs/stream.hpp"

namespace valcs {

inline constexpr std::uint8_t kBitstreamVersion = 1;
inline constexpr std::size_t kBitstreamHeaderSize = 24;

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) {
    u8(static_cast<std::uint8_t>(v & 0xFF));
    u8(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) u8(static_cast<std::uint8_t>((v >> s) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return bytes_.size() - pos_ >= n; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::uint8_t u8() { return bytes_[pos_++]; }
  std::uint16_t u16() {
    const std::uint16_t lo = u8();
    const std::uint16_t hi = u8();
    return static_cast<std::uint16_t>(lo | (hi << 8));
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int s = 0; s < 32; s += 8) v |= static_cast<std::uint32_t>(u8()) << s;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> write_stream(const EncodedStream& stream) {
  const auto& h = stream.header;
  const GridShape shape = h.shape();
  detail::ByteWriter w;
  for (char c : {'V', 'A', 'L', 'C'}) w.u8(static_cast<std::uint8_t>(c));
  w.u8(kBitstreamVersion);
  w.u16(h.width);
  w.u16(h.height);
  w.u8(h.block_size);
  w.u8(h.gop_size);
  w.f32(h.key_ratio);
  w.f32(h.nonkey_ratio);
  w.u8(static_cast<std::uint8_t>(h.allocation));
  w.u32(static_cast<std::uint32_t>(stream.frames.size()));
  for (std::size_t f = 0; f < stream.frames.size(); ++f) {
    const auto& payload = stream.frames[f];
    if (payload.counts.size() != shape.count()) {
      throw StreamError(ErrorCode::kMalformedStream, "payload block count does not match header", f);
    }
    std::size_t total = 0;
    for (auto c : payload.counts) total += c;
    if (total != payload.values.size()) {
      throw StreamError(ErrorCode::kMalformedStream, "payload value count does not match counts", f);
    }
    w.u8(static_cast<std::uint8_t>(payload.kind));
    for (auto c : payload.counts) w.u16(c);
    for (double v : payload.values) {
      const float x = static_cast<float>(v);
      if (!std::isfinite(x)) throw StreamError(ErrorCode::kNonFinite, "coefficient not representable as f32", f);
      w.f32(x);
    }
  }
  return w.take();
}

inline EncodedStream read_stream(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (!r.has(kBitstreamHeaderSize)) throw StreamError(ErrorCode::kTruncated, "header truncated");
  const char magic[4] = {static_cast<char>(r.u8()), static_cast<char>(r.u8()), static_cast<char>(r.u8()),
                         static_cast<char>(r.u8())};
  if (std::string(magic, 4) != "VALC") throw StreamError(ErrorCode::kMalformedStream, "bad magic");
  const std::uint8_t version = r.u8();
  if (version != kBitstreamVersion) {
    throw StreamError(ErrorCode::kMalformedStream, "unsupported version " + std::to_string(version));
  }
  EncodedStream stream;
  auto& h = stream.header;
  h.width = r.u16();
  h.height = r.u16();
  h.block_size = r.u8();
  h.gop_size = r.u8();
  h.key_ratio = r.f32();
  h.nonkey_ratio = r.f32();
  const std::uint8_t allocation = r.u8();
  const std::uint32_t frame_count = r.u32();

  if (allocation > 2) throw StreamError(ErrorCode::kMalformedStream, "unknown allocation id");
  h.allocation = static_cast<Allocation>(allocation);
  if (h.gop_size < 2) throw StreamError(ErrorCode::kMalformedStream, "GOP size below 2");
  if (!(h.key_ratio > 0.0f && h.key_ratio <= 1.0f) || !(h.nonkey_ratio > 0.0f && h.nonkey_ratio <= 1.0f)) {
    throw StreamError(ErrorCode::kMalformedStream, "compression ratio outside (0, 1]");
  }
  GridShape shape;
  try {
    shape = h.shape();
  } catch (const Error& e) {
    throw StreamError(ErrorCode::kMalformedStream, std::string("bad geometry: ") + e.what());
  }

  for (std::uint32_t f = 0; f < frame_count; ++f) {
    FramePayload payload;
    if (!r.has(1 + 2 * shape.count())) throw StreamError(ErrorCode::kTruncated, "frame header truncated", f);
    const std::uint8_t kind = r.u8();
    if (kind > 1) throw StreamError(ErrorCode::kMalformedStream, "unknown frame kind", f);
    payload.kind = static_cast<FrameKind>(kind);
    payload.counts.resize(shape.count());
    std::size_t total = 0;
    for (auto& c : payload.counts) {
      c = r.u16();
      if (c > shape.block_area()) throw StreamError(ErrorCode::kMalformedStream, "block count exceeds B^2", f);
      total += c;
    }
    if (!r.has(4 * total)) throw StreamError(ErrorCode::kTruncated, "coefficient data truncated", f);
    payload.values.resize(total);
    for (double& v : payload.values) {
      const float x = r.f32();
      if (!std::isfinite(x)) throw StreamError(ErrorCode::kMalformedStream, "non-finite coefficient", f);
      v = static_cast<double>(x);
    }
    stream.frames.push_back(std::move(payload));
  }
  if (r.remaining() != 0) {
    throw StreamError(ErrorCode::kMalformedStream, std::to_string(r.remaining()) + " trailing bytes");
  }
  return stream;
}

inline void write_stream_file(const std::filesystem::path& path, const EncodedStream& stream) {
  write_file_bytes(path, write_stream(stream));
}

inline EncodedStream read_stream_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return read_stream(bytes);
}

}  // namespace valcs
