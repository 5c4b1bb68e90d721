#pragma once

#include <cstddef>
#include <vector>

#include "valcs/frame.hpp"
#include "valcs/sensing.hpp"
#include "valcs/transform.hpp"

namespace valcs {

// Zero-fill every unmeasured coefficient and invert the DCT block by block.
// The result is left unclamped.
inline Frame reconstruct_fast(const SensedFrame& sensed) {
  const auto& kernel = dct_kernel(sensed.plan.shape.block_size);
  std::vector<Block> tiles;
  tiles.reserve(sensed.plan.shape.count());
  for (std::size_t i = 0; i < sensed.plan.shape.count(); ++i) {
    tiles.push_back(dct2_inverse(sensed.coefficient_plane(i), kernel));
  }
  return assemble(sensed.plan.shape, tiles, sensed.frame_height, sensed.frame_width);
}

// Orthogonal projection onto the set of frames consistent with the
// measurements: measured coefficients are overwritten, the rest of x is kept.
// Pixels in the cropped margin are not measured and pass through untouched.
inline Frame project_measurements(const Frame& x, const SensedFrame& sensed) {
  if (x.height() != sensed.frame_height || x.width() != sensed.frame_width) {
    throw Error(ErrorCode::kGeometryMismatch, "frame does not match sensed geometry");
  }
  const auto& shape = sensed.plan.shape;
  const int b = shape.block_size;
  const auto& kernel = dct_kernel(b);
  Frame out = x;
  for (std::size_t i = 0; i < shape.count(); ++i) {
    const auto& alloc = sensed.plan.blocks[i];
    if (alloc.positions.empty()) continue;
    const std::size_t r0 = (i / shape.block_cols) * b;
    const std::size_t c0 = (i % shape.block_cols) * b;
    Block tile(b);
    for (int r = 0; r < b; ++r) {
      for (int c = 0; c < b; ++c) tile(r, c) = x(r0 + r, c0 + c);
    }
    Block coeffs = dct2_forward(tile, kernel);
    const auto members = alloc.positions.zigzag_members();
    for (std::size_t k = 0; k < members.size(); ++k) coeffs[members[k]] = sensed.values[i][k];
    const Block back = dct2_inverse(coeffs, kernel);
    for (int r = 0; r < b; ++r) {
      for (int c = 0; c < b; ++c) out(r0 + r, c0 + c) = back(r, c);
    }
  }
  return out;
}

}  // namespace valcs
