#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "valcs/error.hpp"

namespace valcs {

// A single luminance plane. Samples are real valued; 8-bit input is promoted
// on ingest and only rounded back when written out.
class Frame {
 public:
  Frame() = default;
  Frame(std::size_t height, std::size_t width, double fill = 0.0)
      : height_(height), width_(width), samples_(height * width, fill) {}

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }

  double& operator()(std::size_t row, std::size_t col) { return samples_[row * width_ + col]; }
  double operator()(std::size_t row, std::size_t col) const { return samples_[row * width_ + col]; }

  std::span<double> samples() noexcept { return samples_; }
  std::span<const double> samples() const noexcept { return samples_; }

  bool same_geometry(const Frame& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> samples_;
};

inline void require_same_geometry(const Frame& a, const Frame& b, const char* what) {
  if (!a.same_geometry(b)) {
    throw Error(ErrorCode::kGeometryMismatch,
                std::string(what) + ": " + std::to_string(a.height()) + "x" +
                    std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                    std::to_string(b.width()));
  }
}

inline Frame clamp_to_8bit_range(Frame frame) {
  for (double& v : frame.samples()) v = std::clamp(v, 0.0, 255.0);
  return frame;
}

inline std::vector<std::uint8_t> to_u8(const Frame& frame) {
  std::vector<std::uint8_t> out(frame.size());
  auto in = frame.samples();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(in[i], 0.0, 255.0)));
  }
  return out;
}

inline Frame from_u8(std::size_t height, std::size_t width, std::span<const std::uint8_t> bytes) {
  if (bytes.size() != height * width) {
    throw Error(ErrorCode::kGeometryMismatch, "byte count does not match frame geometry");
  }
  Frame frame(height, width);
  std::transform(bytes.begin(), bytes.end(), frame.samples().begin(),
                 [](std::uint8_t b) { return static_cast<double>(b); });
  return frame;
}

inline double max_abs_difference(const Frame& a, const Frame& b) {
  require_same_geometry(a, b, "max_abs_difference");
  double worst = 0.0;
  auto sa = a.samples();
  auto sb = b.samples();
  for (std::size_t i = 0; i < sa.size(); ++i) worst = std::max(worst, std::abs(sa[i] - sb[i]));
  return worst;
}

}  // namespace valcs
