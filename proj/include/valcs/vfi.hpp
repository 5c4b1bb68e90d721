#pragma once

#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "valcs/error.hpp"
#include "valcs/frame.hpp"
#include "valcs/plugin.hpp"

namespace valcs {

// Frames between two decoded key frames at timestamps t in (0, 1).
struct InterpolationRequest {
  Frame first;
  Frame second;
  std::vector<double> timestamps;

  void validate() const {
    require_same_geometry(first, second, "interpolation endpoints");
    double previous = 0.0;
    for (double t : timestamps) {
      if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::kInvalidArgument, "timestamps must lie in (0, 1)");
      if (t <= previous) throw Error(ErrorCode::kInvalidArgument, "timestamps must be strictly increasing");
      previous = t;
    }
  }
};

// Timestamps of the non-key frames of a GOP of size G: t = (i - 1) / G for
// non-key positions i = 2..G.
inline std::vector<double> gop_timestamps(std::size_t gop_size, std::size_t nonkey_count) {
  std::vector<double> t;
  for (std::size_t j = 1; j <= nonkey_count; ++j) {
    t.push_back(static_cast<double>(j) / static_cast<double>(gop_size));
  }
  return t;
}

struct InterpolationResult {
  std::vector<Frame> frames;
  bool degraded = false;
};

class Interpolator {
 public:
  virtual ~Interpolator() = default;
  virtual InterpolationResult interpolate(const InterpolationRequest& request) = 0;
  virtual std::string name() const = 0;
};

// R_t = (1 - t) a + t b
inline std::vector<Frame> interpolate_linear(const InterpolationRequest& request) {
  request.validate();
  std::vector<Frame> out;
  out.reserve(request.timestamps.size());
  const auto a = request.first.samples();
  const auto b = request.second.samples();
  for (double t : request.timestamps) {
    Frame r(request.first.height(), request.first.width());
    auto s = r.samples();
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = (1.0 - t) * a[i] + t * b[i];
    out.push_back(std::move(r));
  }
  return out;
}

class LinearInterpolator final : public Interpolator {
 public:
  InterpolationResult interpolate(const InterpolationRequest& request) override {
    return {interpolate_linear(request), false};
  }
  std::string name() const override { return "linear"; }
};

// Calls an external interpolation plugin. Any failure falls back to the linear
// blend and marks the result degraded.
inline InterpolationResult interpolate_external(const InterpolationRequest& request,
                                                const PluginBridge& bridge,
                                                std::ostream* log = &std::cerr) {
  request.validate();
  PluginCall call;
  call.role = "interpolate";
  call.inputs = {request.first, request.second};
  call.timestamps = request.timestamps;
  call.expected_outputs = request.timestamps.size();
  try {
    return {bridge.run(call), false};
  } catch (const Error& e) {
    if (log) *log << "warning: interpolation plugin failed, using linear blend: " << e.what() << '\n';
    return {interpolate_linear(request), true};
  }
}

class ExternalInterpolator final : public Interpolator {
 public:
  explicit ExternalInterpolator(PluginOptions options, std::ostream* log = &std::cerr)
      : bridge_(std::move(options)), log_(log) {}

  InterpolationResult interpolate(const InterpolationRequest& request) override {
    return interpolate_external(request, bridge_, log_);
  }
  std::string name() const override { return "external"; }

 private:
  PluginBridge bridge_;
  std::ostream* log_;
};

}  // namespace valcs
