#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "valcs/sensing.hpp"

namespace valcs {

// Sequence-level parameters carried in the bitstream header.
struct StreamHeader {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::uint8_t block_size = 16;
  std::uint8_t gop_size = 8;
  float key_ratio = 0.7f;
  float nonkey_ratio = 0.1f;
  Allocation allocation = Allocation::kMdd;

  GridShape shape() const { return grid_shape_for(height, width, block_size); }

  friend bool operator==(const StreamHeader&, const StreamHeader&) = default;
};

// What is transmitted per frame: the kind, the per-block measurement counts
// in raster order and the measured values, block after block, each block in
// ascending zigzag rank of its positions.
struct FramePayload {
  FrameKind kind = FrameKind::kKey;
  std::vector<std::uint16_t> counts;
  std::vector<double> values;

  friend bool operator==(const FramePayload&, const FramePayload&) = default;
};

struct EncodedStream {
  StreamHeader header;
  std::vector<FramePayload> frames;

  friend bool operator==(const EncodedStream&, const EncodedStream&) = default;
};

inline FramePayload to_payload(const SensedFrame& sensed) {
  FramePayload payload;
  payload.kind = sensed.kind;
  payload.counts.reserve(sensed.plan.blocks.size());
  for (std::size_t i = 0; i < sensed.plan.blocks.size(); ++i) {
    payload.counts.push_back(static_cast<std::uint16_t>(sensed.plan.blocks[i].count()));
    payload.values.insert(payload.values.end(), sensed.values[i].begin(), sensed.values[i].end());
  }
  return payload;
}

}  // namespace valcs
