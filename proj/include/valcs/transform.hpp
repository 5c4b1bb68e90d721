#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "valcs/error.hpp"

namespace valcs {

inline bool is_supported_block_size(int block_size) {
  return block_size == 4 || block_size == 8 || block_size == 16 || block_size == 32;
}

inline void require_block_size(int block_size) {
  if (!is_supported_block_size(block_size)) {
    throw Error(ErrorCode::kInvalidArgument,
                "block size must be one of 4, 8, 16, 32 (got " + std::to_string(block_size) + ")");
  }
}

// Square B x B array of samples or transform coefficients, row-major.
class Block {
 public:
  Block() = default;
  explicit Block(int size, double fill = 0.0)
      : size_(size), values_(static_cast<std::size_t>(size) * size, fill) {}

  int size() const noexcept { return size_; }
  std::size_t area() const noexcept { return values_.size(); }

  double& operator()(int row, int col) { return values_[static_cast<std::size_t>(row) * size_ + col]; }
  double operator()(int row, int col) const {
    return values_[static_cast<std::size_t>(row) * size_ + col];
  }
  double& operator[](std::size_t natural_index) { return values_[natural_index]; }
  double operator[](std::size_t natural_index) const { return values_[natural_index]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const Block&, const Block&) = default;

 private:
  int size_ = 0;
  std::vector<double> values_;
};

// Orthonormal type-II DCT basis. Row k of the basis holds the k-th cosine,
// so coefficients = basis * block * basis^T and block = basis^T * coeffs * basis.
class TransformKernel {
 public:
  explicit TransformKernel(int block_size) : size_(block_size) {
    require_block_size(block_size);
    basis_.resize(static_cast<std::size_t>(size_) * size_);
    const double n = static_cast<double>(size_);
    for (int k = 0; k < size_; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      for (int x = 0; x < size_; ++x) {
        basis_[static_cast<std::size_t>(k) * size_ + x] =
            scale * std::cos(std::numbers::pi * (2.0 * x + 1.0) * k / (2.0 * n));
      }
    }
  }

  int block_size() const noexcept { return size_; }
  double basis(int k, int x) const { return basis_[static_cast<std::size_t>(k) * size_ + x]; }

 private:
  int size_;
  std::vector<double> basis_;
};

// Shared immutable kernel for a supported block size.
inline const TransformKernel& dct_kernel(int block_size) {
  require_block_size(block_size);
  static const std::array<TransformKernel, 4> kernels{TransformKernel(4), TransformKernel(8),
                                                      TransformKernel(16), TransformKernel(32)};
  switch (block_size) {
    case 4: return kernels[0];
    case 8: return kernels[1];
    case 16: return kernels[2];
    default: return kernels[3];
  }
}

namespace detail {

// out = left * in * right, where left/right are chosen by `forward`.
inline Block separable_apply(const Block& in, const TransformKernel& kernel, bool forward) {
  const int n = kernel.block_size();
  if (in.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "block is " + std::to_string(in.size()) +
                                                 "x" + std::to_string(in.size()) +
                                                 ", kernel expects " + std::to_string(n));
  }
  Block tmp(n);
  Block out(n);
  // Rows first (along columns index), then columns.
  for (int r = 0; r < n; ++r) {
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int x = 0; x < n; ++x) {
        acc += in(r, x) * (forward ? kernel.basis(k, x) : kernel.basis(x, k));
      }
      tmp(r, k) = acc;
    }
  }
  for (int c = 0; c < n; ++c) {
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int x = 0; x < n; ++x) {
        acc += tmp(x, c) * (forward ? kernel.basis(k, x) : kernel.basis(x, k));
      }
      out(k, c) = acc;
    }
  }
  return out;
}

}  // namespace detail

inline Block dct2_forward(const Block& block, const TransformKernel& kernel) {
  return detail::separable_apply(block, kernel, true);
}

inline Block dct2_inverse(const Block& coeffs, const TransformKernel& kernel) {
  return detail::separable_apply(coeffs, kernel, false);
}

inline Block dct2_forward(const Block& block) { return dct2_forward(block, dct_kernel(block.size())); }
inline Block dct2_inverse(const Block& coeffs) { return dct2_inverse(coeffs, dct_kernel(coeffs.size())); }

struct Position {
  int row = 0;
  int col = 0;
  friend bool operator==(const Position&, const Position&) = default;
};

// JPEG zigzag scan over a B x B block: DC first, then anti-diagonals in
// alternating direction. Coefficients stay in natural layout; this is a view.
class ZigzagOrder {
 public:
  explicit ZigzagOrder(int block_size) : size_(block_size) {
    require_block_size(block_size);
    const int n = size_;
    order_.reserve(static_cast<std::size_t>(n) * n);
    rank_.assign(static_cast<std::size_t>(n) * n, 0);
    for (int s = 0; s <= 2 * (n - 1); ++s) {
      if (s % 2 == 0) {
        for (int row = std::min(s, n - 1); row >= 0 && s - row < n; --row) order_.push_back({row, s - row});
      } else {
        for (int col = std::min(s, n - 1); col >= 0 && s - col < n; --col) order_.push_back({s - col, col});
      }
    }
    for (std::size_t r = 0; r < order_.size(); ++r) {
      rank_[static_cast<std::size_t>(order_[r].row) * n + order_[r].col] = static_cast<int>(r);
    }
  }

  int block_size() const noexcept { return size_; }
  std::size_t length() const noexcept { return order_.size(); }
  const Position& operator[](std::size_t rank) const { return order_[rank]; }
  std::span<const Position> positions() const noexcept { return order_; }

  std::size_t natural_index(std::size_t rank) const {
    return static_cast<std::size_t>(order_[rank].row) * size_ + order_[rank].col;
  }
  int rank_of(std::size_t natural_index) const { return rank_[natural_index]; }

 private:
  int size_;
  std::vector<Position> order_;
  std::vector<int> rank_;
};

inline const ZigzagOrder& zigzag_order(int block_size) {
  require_block_size(block_size);
  static const std::array<ZigzagOrder, 4> orders{ZigzagOrder(4), ZigzagOrder(8), ZigzagOrder(16),
                                                 ZigzagOrder(32)};
  switch (block_size) {
    case 4: return orders[0];
    case 8: return orders[1];
    case 16: return orders[2];
    default: return orders[3];
  }
}

// Set of coefficient positions within one block, stored as an indicator over
// the natural layout.
class PositionMask {
 public:
  PositionMask() = default;
  explicit PositionMask(int block_size)
      : size_(block_size), bits_(static_cast<std::size_t>(block_size) * block_size, false) {
    require_block_size(block_size);
  }

  static PositionMask all(int block_size) {
    PositionMask mask(block_size);
    mask.bits_.assign(mask.bits_.size(), true);
    mask.count_ = mask.bits_.size();
    return mask;
  }

  int block_size() const noexcept { return size_; }
  std::size_t count() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  bool contains(std::size_t natural_index) const { return bits_[natural_index]; }
  bool contains(Position p) const { return bits_[index_of(p)]; }

  void insert(std::size_t natural_index) {
    check_index(natural_index);
    if (!bits_[natural_index]) {
      bits_[natural_index] = true;
      ++count_;
    }
  }
  void insert(Position p) { insert(index_of(p)); }

  void erase(std::size_t natural_index) {
    check_index(natural_index);
    if (bits_[natural_index]) {
      bits_[natural_index] = false;
      --count_;
    }
  }

  // Natural indices of the members, listed in ascending zigzag rank. This is
  // the canonical order in which measured values are stored and transmitted.
  std::vector<std::size_t> zigzag_members() const {
    std::vector<std::size_t> out;
    out.reserve(count_);
    const auto& zz = zigzag_order(size_);
    for (std::size_t r = 0; r < zz.length(); ++r) {
      const std::size_t idx = zz.natural_index(r);
      if (bits_[idx]) out.push_back(idx);
    }
    return out;
  }

  bool operator[](std::size_t natural_index) const { return bits_[natural_index]; }

  friend bool operator==(const PositionMask&, const PositionMask&) = default;

 private:
  std::size_t index_of(Position p) const {
    if (p.row < 0 || p.col < 0 || p.row >= size_ || p.col >= size_) {
      throw Error(ErrorCode::kInvalidArgument, "position outside block");
    }
    return static_cast<std::size_t>(p.row) * size_ + p.col;
  }
  void check_index(std::size_t natural_index) const {
    if (natural_index >= bits_.size()) throw Error(ErrorCode::kInvalidArgument, "position outside block");
  }

  int size_ = 0;
  std::vector<bool> bits_;
  std::size_t count_ = 0;
};

// First `count` positions of the zigzag scan.
inline PositionMask zigzag_prefix(int block_size, std::size_t count) {
  PositionMask mask(block_size);
  const auto& zz = zigzag_order(block_size);
  if (count > zz.length()) {
    throw Error(ErrorCode::kInvalidArgument, "zigzag prefix length " + std::to_string(count) +
                                                 " exceeds " + std::to_string(zz.length()));
  }
  for (std::size_t r = 0; r < count; ++r) mask.insert(zz.natural_index(r));
  return mask;
}

namespace detail {
inline void require_same_block(const PositionMask& a, const PositionMask& b) {
  if (a.block_size() != b.block_size()) {
    throw Error(ErrorCode::kInvalidArgument, "position masks have different block sizes");
  }
}
}  // namespace detail

inline PositionMask mask_complement(const PositionMask& a) {
  PositionMask out(a.block_size());
  const std::size_t area = static_cast<std::size_t>(a.block_size()) * a.block_size();
  for (std::size_t i = 0; i < area; ++i) {
    if (!a.contains(i)) out.insert(i);
  }
  return out;
}

inline PositionMask mask_difference(const PositionMask& a, const PositionMask& b) {
  detail::require_same_block(a, b);
  PositionMask out(a.block_size());
  const std::size_t area = static_cast<std::size_t>(a.block_size()) * a.block_size();
  for (std::size_t i = 0; i < area; ++i) {
    if (a.contains(i) && !b.contains(i)) out.insert(i);
  }
  return out;
}

inline PositionMask mask_union(const PositionMask& a, const PositionMask& b) {
  detail::require_same_block(a, b);
  PositionMask out(a.block_size());
  const std::size_t area = static_cast<std::size_t>(a.block_size()) * a.block_size();
  for (std::size_t i = 0; i < area; ++i) {
    if (a.contains(i) || b.contains(i)) out.insert(i);
  }
  return out;
}

inline PositionMask mask_intersection(const PositionMask& a, const PositionMask& b) {
  detail::require_same_block(a, b);
  PositionMask out(a.block_size());
  const std::size_t area = static_cast<std::size_t>(a.block_size()) * a.block_size();
  for (std::size_t i = 0; i < area; ++i) {
    if (a.contains(i) && b.contains(i)) out.insert(i);
  }
  return out;
}

inline bool is_subset(const PositionMask& a, const PositionMask& b) {
  detail::require_same_block(a, b);
  return mask_difference(a, b).empty();
}

// coeffs with every position outside `mask` zeroed.
inline Block apply_mask(const Block& coeffs, const PositionMask& mask) {
  if (coeffs.size() != mask.block_size()) {
    throw Error(ErrorCode::kInvalidArgument, "mask and block sizes differ");
  }
  Block out(coeffs.size());
  for (std::size_t i = 0; i < coeffs.area(); ++i) {
    if (mask.contains(i)) out[i] = coeffs[i];
  }
  return out;
}

}  // namespace valcs
