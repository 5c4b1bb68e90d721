#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "valcs/error.hpp"
#include "valcs/frame.hpp"
#include "valcs/transform.hpp"

namespace valcs {

// Layout of the cropped block grid. Blocks are indexed in raster order.
struct GridShape {
  int block_size = 0;
  std::size_t block_rows = 0;
  std::size_t block_cols = 0;

  std::size_t count() const noexcept { return block_rows * block_cols; }
  std::size_t block_area() const noexcept {
    return static_cast<std::size_t>(block_size) * block_size;
  }
  std::size_t coefficient_count() const noexcept { return count() * block_area(); }

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

inline GridShape grid_shape_for(std::size_t height, std::size_t width, int block_size) {
  require_block_size(block_size);
  const auto b = static_cast<std::size_t>(block_size);
  if (height < b || width < b) {
    throw Error(ErrorCode::kInvalidArgument, "frame " + std::to_string(height) + "x" +
                                                 std::to_string(width) +
                                                 " is smaller than one block of " +
                                                 std::to_string(block_size));
  }
  return {block_size, height / b, width / b};
}

struct BlockGrid {
  GridShape shape;
  std::size_t frame_height = 0;
  std::size_t frame_width = 0;
  std::vector<Block> tiles;

  // Rows/columns dropped at the bottom/right edge by cropping.
  std::size_t margin_rows() const noexcept { return frame_height - shape.block_rows * shape.block_size; }
  std::size_t margin_cols() const noexcept { return frame_width - shape.block_cols * shape.block_size; }
};

inline BlockGrid partition(const Frame& frame, int block_size) {
  BlockGrid grid;
  grid.shape = grid_shape_for(frame.height(), frame.width(), block_size);
  grid.frame_height = frame.height();
  grid.frame_width = frame.width();
  grid.tiles.reserve(grid.shape.count());
  for (std::size_t br = 0; br < grid.shape.block_rows; ++br) {
    for (std::size_t bc = 0; bc < grid.shape.block_cols; ++bc) {
      Block tile(block_size);
      for (int r = 0; r < block_size; ++r) {
        for (int c = 0; c < block_size; ++c) {
          tile(r, c) = frame(br * block_size + r, bc * block_size + c);
        }
      }
      grid.tiles.push_back(std::move(tile));
    }
  }
  return grid;
}

// Inverse of partition. Cropped margins are filled by replicating the nearest
// reconstructed sample so the output keeps the original geometry.
inline Frame assemble(const GridShape& shape, const std::vector<Block>& tiles, std::size_t height,
                      std::size_t width) {
  if (tiles.size() != shape.count()) {
    throw Error(ErrorCode::kGeometryMismatch, "tile count does not match grid");
  }
  const auto b = static_cast<std::size_t>(shape.block_size);
  const std::size_t covered_h = shape.block_rows * b;
  const std::size_t covered_w = shape.block_cols * b;
  if (height < covered_h || width < covered_w) {
    throw Error(ErrorCode::kGeometryMismatch, "frame smaller than block grid");
  }
  Frame frame(height, width);
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const std::size_t br = i / shape.block_cols;
    const std::size_t bc = i % shape.block_cols;
    for (std::size_t r = 0; r < b; ++r) {
      for (std::size_t c = 0; c < b; ++c) {
        frame(br * b + r, bc * b + c) = tiles[i](static_cast<int>(r), static_cast<int>(c));
      }
    }
  }
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      if (r < covered_h && c < covered_w) continue;
      frame(r, c) = frame(std::min(r, covered_h - 1), std::min(c, covered_w - 1));
    }
  }
  return frame;
}

enum class Allocation : std::uint8_t { kThi = 0, kMdd = 1, kFixed = 2 };

inline const char* to_string(Allocation a) {
  switch (a) {
    case Allocation::kThi: return "thi";
    case Allocation::kMdd: return "mdd";
    case Allocation::kFixed: return "fixed";
  }
  return "?";
}

struct BlockAllocation {
  std::size_t phase1 = 0;
  std::size_t phase2 = 0;
  PositionMask positions;

  std::size_t count() const noexcept { return phase1 + phase2; }
  friend bool operator==(const BlockAllocation&, const BlockAllocation&) = default;
};

struct MeasurementPlan {
  GridShape shape;
  Allocation algorithm = Allocation::kThi;
  std::vector<BlockAllocation> blocks;

  std::size_t total() const noexcept {
    std::size_t sum = 0;
    for (const auto& b : blocks) sum += b.count();
    return sum;
  }

  // Checks the structural invariants: every block holds its phase-1 zigzag
  // prefix, and the position count matches m1 + m2 <= B^2.
  void validate() const {
    if (blocks.size() != shape.count()) {
      throw Error(ErrorCode::kGeometryMismatch, "plan block count does not match grid");
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& b = blocks[i];
      if (b.positions.block_size() != shape.block_size || b.count() > shape.block_area() ||
          b.positions.count() != b.count() ||
          !is_subset(zigzag_prefix(shape.block_size, b.phase1), b.positions)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "measurement plan invariant violated in block " + std::to_string(i));
      }
    }
  }

  friend bool operator==(const MeasurementPlan&, const MeasurementPlan&) = default;
};

// Non-adaptive phase-1 count per block: floor(B^2 / (2 C_F)). The small
// tolerance keeps exact quotients from rounding down through float error.
inline std::size_t phase1_count(int block_size, double compression_factor) {
  require_block_size(block_size);
  if (!(compression_factor >= 1.0) || !std::isfinite(compression_factor)) {
    throw Error(ErrorCode::kInvalidArgument, "compression factor must be >= 1");
  }
  const double area = static_cast<double>(block_size) * block_size;
  return static_cast<std::size_t>(std::floor(area / (2.0 * compression_factor) + 1e-9));
}

inline void require_ratio(double ratio, const char* what) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, std::string(what) + " must lie in (0, 1]");
  }
}

inline std::size_t phase1_count_for_ratio(int block_size, double ratio) {
  require_ratio(ratio, "compression ratio");
  return phase1_count(block_size, 1.0 / ratio);
}

// Total measurement budget M for one frame at compression ratio `ratio`.
inline std::size_t measurement_budget(const GridShape& shape, double ratio) {
  require_ratio(ratio, "compression ratio");
  return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(shape.coefficient_count())));
}

using CoefficientVectors = std::vector<std::vector<double>>;

inline CoefficientVectors sense_phase1(const BlockGrid& grid, std::size_t phase1) {
  const int b = grid.shape.block_size;
  if (phase1 > grid.shape.block_area()) {
    throw Error(ErrorCode::kInvalidArgument, "phase-1 count exceeds block area");
  }
  const auto& zz = zigzag_order(b);
  const auto& kernel = dct_kernel(b);
  CoefficientVectors out;
  out.reserve(grid.tiles.size());
  for (const auto& tile : grid.tiles) {
    std::vector<double> v(phase1);
    if (phase1 > 0) {
      const Block coeffs = dct2_forward(tile, kernel);
      for (std::size_t r = 0; r < phase1; ++r) v[r] = coeffs[zz.natural_index(r)];
    }
    out.push_back(std::move(v));
  }
  return out;
}

namespace detail {

inline std::size_t common_phase1_length(const GridShape& shape, const CoefficientVectors& phase1) {
  if (phase1.size() != shape.count()) {
    throw Error(ErrorCode::kGeometryMismatch, "phase-1 vectors do not cover the grid");
  }
  const std::size_t m1 = phase1.empty() ? 0 : phase1.front().size();
  for (const auto& v : phase1) {
    if (v.size() != m1) throw Error(ErrorCode::kInvalidArgument, "phase-1 vectors differ in length");
  }
  if (m1 > shape.block_area()) throw Error(ErrorCode::kInvalidArgument, "phase-1 length exceeds block area");
  return m1;
}

inline MeasurementPlan prefix_plan(const GridShape& shape, Allocation algorithm,
                                   std::size_t phase1, const std::vector<std::size_t>& phase2) {
  MeasurementPlan plan;
  plan.shape = shape;
  plan.algorithm = algorithm;
  plan.blocks.reserve(shape.count());
  for (std::size_t i = 0; i < shape.count(); ++i) {
    plan.blocks.push_back({phase1, phase2[i], zigzag_prefix(shape.block_size, phase1 + phase2[i])});
  }
  return plan;
}

}  // namespace detail

// Threshold-over-the-whole-image allocation. The threshold is the magnitude of
// the floor(M/4)-th largest phase-1 coefficient across all blocks; each block
// then collects twice as many extra zigzag coefficients as it has phase-1
// coefficients strictly above the threshold.
inline MeasurementPlan thi_allocate(const GridShape& shape, const CoefficientVectors& phase1,
                                    std::size_t budget) {
  const std::size_t m1 = detail::common_phase1_length(shape, phase1);
  if (m1 == 0) throw Error(ErrorCode::kInvalidBudget, "THI needs at least one phase-1 coefficient per block");
  if (budget > shape.coefficient_count()) {
    throw Error(ErrorCode::kInvalidBudget, "budget exceeds the number of coefficients in the frame");
  }
  const std::size_t rank = budget / 4;
  const std::size_t total = shape.count() * m1;
  if (rank > total) {
    throw Error(ErrorCode::kInvalidBudget, "floor(M/4) = " + std::to_string(rank) +
                                               " exceeds the " + std::to_string(total) +
                                               " phase-1 coefficients");
  }

  std::vector<std::size_t> phase2(shape.count(), 0);
  if (rank > 0) {
    std::vector<double> magnitudes;
    magnitudes.reserve(total);
    for (const auto& v : phase1) {
      for (double x : v) magnitudes.push_back(std::abs(x));
    }
    auto nth = magnitudes.begin() + static_cast<std::ptrdiff_t>(rank - 1);
    std::nth_element(magnitudes.begin(), nth, magnitudes.end(), std::greater<>());
    const double threshold = *nth;

    const std::size_t room = shape.block_area() - m1;
    for (std::size_t i = 0; i < phase1.size(); ++i) {
      const auto above = static_cast<std::size_t>(
          std::count_if(phase1[i].begin(), phase1[i].end(),
                        [&](double x) { return std::abs(x) > threshold; }));
      phase2[i] = std::min(2 * above, room);
    }
  }
  return detail::prefix_plan(shape, Allocation::kThi, m1, phase2);
}

// Mixed-mode DCT-domain allocation. The reference planes have their phase-1
// zigzag prefix replaced by the current frame's phase-1 values; the top-M
// positions of the mixed planes (by magnitude, ties by block then zigzag rank)
// that fall outside the prefix become each block's phase-2 positions.
inline MeasurementPlan mdd_allocate(const GridShape& shape, const CoefficientVectors& phase1,
                                    const std::vector<Block>& reference_planes,
                                    std::size_t budget) {
  const std::size_t m1 = detail::common_phase1_length(shape, phase1);
  if (reference_planes.size() != shape.count()) {
    throw Error(ErrorCode::kGeometryMismatch, "reference planes do not cover the grid");
  }
  for (const auto& plane : reference_planes) {
    if (plane.size() != shape.block_size) {
      throw Error(ErrorCode::kGeometryMismatch, "reference plane has the wrong block size");
    }
  }
  if (budget > shape.coefficient_count()) {
    throw Error(ErrorCode::kInvalidBudget, "budget exceeds the number of coefficients in the frame");
  }

  struct Candidate {
    double magnitude;
    std::uint32_t block;
    std::uint32_t rank;
  };
  const auto& zz = zigzag_order(shape.block_size);
  const std::size_t area = shape.block_area();
  std::vector<Candidate> candidates;
  candidates.reserve(shape.coefficient_count());
  for (std::size_t i = 0; i < shape.count(); ++i) {
    for (std::size_t r = 0; r < area; ++r) {
      const double value = r < m1 ? phase1[i][r] : reference_planes[i][zz.natural_index(r)];
      candidates.push_back({std::abs(value), static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(r)});
    }
  }
  auto before = [](const Candidate& a, const Candidate& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    if (a.block != b.block) return a.block < b.block;
    return a.rank < b.rank;
  };
  const auto top = candidates.begin() + static_cast<std::ptrdiff_t>(budget);
  std::nth_element(candidates.begin(), top, candidates.end(), before);

  MeasurementPlan plan;
  plan.shape = shape;
  plan.algorithm = Allocation::kMdd;
  plan.blocks.reserve(shape.count());
  for (std::size_t i = 0; i < shape.count(); ++i) {
    plan.blocks.push_back({m1, 0, zigzag_prefix(shape.block_size, m1)});
  }
  for (auto it = candidates.begin(); it != top; ++it) {
    if (it->rank < m1) continue;
    auto& b = plan.blocks[it->block];
    b.positions.insert(zz.natural_index(it->rank));
    ++b.phase2;
  }
  return plan;
}

// Non-adaptive baseline: every block takes the same zigzag prefix of
// round(ratio * B^2) coefficients.
inline MeasurementPlan fixed_allocate(const GridShape& shape, double ratio) {
  require_ratio(ratio, "compression ratio");
  const auto per_block = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(shape.block_area())));
  return detail::prefix_plan(shape, Allocation::kFixed, per_block,
                             std::vector<std::size_t>(shape.count(), 0));
}

// Plan in which every block is a zigzag prefix of the given length. This is
// how THI and FIXED plans are rebuilt from transmitted counts alone.
inline MeasurementPlan prefix_plan_from_counts(const GridShape& shape, Allocation algorithm,
                                               std::size_t phase1,
                                               const std::vector<std::size_t>& counts) {
  if (counts.size() != shape.count()) {
    throw Error(ErrorCode::kGeometryMismatch, "count vector does not cover the grid");
  }
  MeasurementPlan plan;
  plan.shape = shape;
  plan.algorithm = algorithm;
  plan.blocks.reserve(counts.size());
  for (std::size_t count : counts) {
    if (count > shape.block_area()) {
      throw Error(ErrorCode::kInvalidArgument, "block count exceeds block area");
    }
    const std::size_t p1 = std::min(phase1, count);
    plan.blocks.push_back({p1, count - p1, zigzag_prefix(shape.block_size, count)});
  }
  return plan;
}

inline MeasurementPlan full_plan(const GridShape& shape) {
  return detail::prefix_plan(shape, Allocation::kFixed, shape.block_area(),
                             std::vector<std::size_t>(shape.count(), 0));
}

enum class FrameKind : std::uint8_t { kKey = 0, kNonKey = 1 };

inline const char* to_string(FrameKind k) { return k == FrameKind::kKey ? "key" : "nonkey"; }

// One frame's measurements: the plan and, per block, the coefficient values at
// the planned positions in ascending zigzag rank.
struct SensedFrame {
  MeasurementPlan plan;
  CoefficientVectors values;
  std::size_t frame_height = 0;
  std::size_t frame_width = 0;
  FrameKind kind = FrameKind::kKey;

  double realized_ratio() const {
    const std::size_t n = plan.shape.coefficient_count();
    return n == 0 ? 0.0 : static_cast<double>(plan.total()) / static_cast<double>(n);
  }

  // Coefficient plane of block i with zeros at unmeasured positions.
  Block coefficient_plane(std::size_t i) const {
    Block plane(plan.shape.block_size);
    const auto members = plan.blocks[i].positions.zigzag_members();
    for (std::size_t k = 0; k < members.size(); ++k) plane[members[k]] = values[i][k];
    return plane;
  }

  std::vector<Block> coefficient_planes() const {
    std::vector<Block> planes;
    planes.reserve(plan.blocks.size());
    for (std::size_t i = 0; i < plan.blocks.size(); ++i) planes.push_back(coefficient_plane(i));
    return planes;
  }

  friend bool operator==(const SensedFrame&, const SensedFrame&) = default;
};

inline SensedFrame sense_with_plan(const BlockGrid& grid, const MeasurementPlan& plan,
                                   FrameKind kind = FrameKind::kKey) {
  if (!(plan.shape == grid.shape)) {
    throw Error(ErrorCode::kGeometryMismatch, "plan grid does not match block grid");
  }
  plan.validate();
  SensedFrame sensed;
  sensed.plan = plan;
  sensed.frame_height = grid.frame_height;
  sensed.frame_width = grid.frame_width;
  sensed.kind = kind;
  sensed.values.reserve(grid.tiles.size());
  const auto& kernel = dct_kernel(grid.shape.block_size);
  for (std::size_t i = 0; i < grid.tiles.size(); ++i) {
    const auto members = plan.blocks[i].positions.zigzag_members();
    std::vector<double> v;
    v.reserve(members.size());
    if (!members.empty()) {
      const Block coeffs = dct2_forward(grid.tiles[i], kernel);
      for (std::size_t idx : members) v.push_back(coeffs[idx]);
    }
    sensed.values.push_back(std::move(v));
  }
  return sensed;
}

}  // namespace valcs
