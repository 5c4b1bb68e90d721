#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "valcs/error.hpp"
#include "valcs/frame.hpp"
#include "valcs/plugin.hpp"
#include "valcs/reconstruction.hpp"
#include "valcs/sensing.hpp"

namespace valcs {

// Frame -> frame denoiser. `sigma` is the noise scale in 8-bit pixel units.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Frame denoise(const Frame& x, double sigma) = 0;
  virtual std::string name() const = 0;
};

class IdentityDenoiser final : public Denoiser {
 public:
  Frame denoise(const Frame& x, double) override { return x; }
  std::string name() const override { return "identity"; }
};

// Separable Gaussian blur whose spatial width grows with sigma:
// std_dev = pixels_per_sigma * sigma. Borders are replicated.
class GaussianDenoiser final : public Denoiser {
 public:
  explicit GaussianDenoiser(double pixels_per_sigma = 0.1) : pixels_per_sigma_(pixels_per_sigma) {
    if (!(pixels_per_sigma > 0.0)) throw Error(ErrorCode::kInvalidConfig, "pixels_per_sigma must be positive");
  }

  Frame denoise(const Frame& x, double sigma) override {
    const double std_dev = pixels_per_sigma_ * sigma;
    if (!(std_dev > 1e-3)) return x;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * std_dev)));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      taps[k + radius] = std::exp(-0.5 * k * k / (std_dev * std_dev));
      sum += taps[k + radius];
    }
    for (double& t : taps) t /= sum;

    const auto h = static_cast<long>(x.height());
    const auto w = static_cast<long>(x.width());
    Frame tmp(x.height(), x.width());
    for (long r = 0; r < h; ++r) {
      for (long c = 0; c < w; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) acc += taps[k + radius] * x(r, std::clamp(c + k, 0L, w - 1));
        tmp(r, c) = acc;
      }
    }
    Frame out(x.height(), x.width());
    for (long r = 0; r < h; ++r) {
      for (long c = 0; c < w; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) acc += taps[k + radius] * tmp(std::clamp(r + k, 0L, h - 1), c);
        out(r, c) = acc;
      }
    }
    return out;
  }
  std::string name() const override { return "gaussian"; }

 private:
  double pixels_per_sigma_;
};

// One-level orthonormal 2x2 Haar decomposition with soft thresholding of the
// three detail bands at threshold_scale * sigma. Averaged over the four
// one-pixel shifts of the Haar grid.
class HaarShrinkDenoiser final : public Denoiser {
 public:
  explicit HaarShrinkDenoiser(double threshold_scale = 1.0) : threshold_scale_(threshold_scale) {
    if (!(threshold_scale >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "threshold_scale must be >= 0");
  }

  Frame denoise(const Frame& x, double sigma) override {
    const double tau = threshold_scale_ * sigma;
    Frame acc(x.height(), x.width());
    for (std::size_t sy = 0; sy < 2; ++sy) {
      for (std::size_t sx = 0; sx < 2; ++sx) {
        const Frame shifted = shrink_at(x, sy, sx, tau);
        auto a = acc.samples();
        auto s = shifted.samples();
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += 0.25 * s[i];
      }
    }
    return acc;
  }
  std::string name() const override { return "haar"; }

 private:
  static double soft(double v, double tau) {
    if (v > tau) return v - tau;
    if (v < -tau) return v + tau;
    return 0.0;
  }

  static Frame shrink_at(const Frame& x, std::size_t sy, std::size_t sx, double tau) {
    Frame out = x;
    for (std::size_t r = sy; r + 1 < x.height(); r += 2) {
      for (std::size_t c = sx; c + 1 < x.width(); c += 2) {
        const double a = x(r, c), b = x(r, c + 1), d = x(r + 1, c), e = x(r + 1, c + 1);
        const double ll = 0.5 * (a + b + d + e);
        const double lh = soft(0.5 * (a - b + d - e), tau);
        const double hl = soft(0.5 * (a + b - d - e), tau);
        const double hh = soft(0.5 * (a - b - d + e), tau);
        out(r, c) = 0.5 * (ll + lh + hl + hh);
        out(r, c + 1) = 0.5 * (ll - lh + hl - hh);
        out(r + 1, c) = 0.5 * (ll + lh - hl - hh);
        out(r + 1, c + 1) = 0.5 * (ll - lh - hl + hh);
      }
    }
    return out;
  }

  double threshold_scale_;
};

// Denoiser reached through the plugin file protocol with role "denoise".
class ExternalDenoiser final : public Denoiser {
 public:
  explicit ExternalDenoiser(PluginOptions options) : bridge_(std::move(options)) {}

  Frame denoise(const Frame& x, double sigma) override {
    PluginCall call;
    call.role = "denoise";
    call.inputs = {x};
    call.sigma = sigma;
    call.expected_outputs = 1;
    return std::move(bridge_.run(call).front());
  }
  std::string name() const override { return "external"; }

 private:
  PluginBridge bridge_;
};

// sigma_k = initial * decay^k. decay = 1 gives a constant schedule.
struct SigmaSchedule {
  double initial = 10.0;
  double decay = 1.0;

  double at(int iteration) const { return initial * std::pow(decay, iteration); }
};

struct IdaConfig {
  int iterations = 20;
  double damping = 1.0;
  SigmaSchedule sigma;

  void validate() const {
    if (iterations < 1) throw Error(ErrorCode::kInvalidConfig, "IDA needs at least one iteration");
    if (!(damping > 0.0 && damping <= 1.0)) throw Error(ErrorCode::kInvalidConfig, "IDA damping must lie in (0, 1]");
    if (!(sigma.initial >= 0.0) || !(sigma.decay > 0.0)) {
      throw Error(ErrorCode::kInvalidConfig, "invalid sigma schedule");
    }
  }
};

// Projected plug-and-play denoising:
//   x <- x + damping * (P(denoise(x)) - x)
// where P enforces consistency with the measured coefficients.
inline Frame ida_reconstruct(const SensedFrame& sensed, Denoiser& denoiser, const IdaConfig& config,
                             std::optional<Frame> initial = std::nullopt) {
  config.validate();
  Frame x = initial ? std::move(*initial) : reconstruct_fast(sensed);
  if (x.height() != sensed.frame_height || x.width() != sensed.frame_width) {
    throw Error(ErrorCode::kGeometryMismatch, "initial frame does not match sensed geometry");
  }
  for (int k = 0; k < config.iterations; ++k) {
    const Frame denoised = denoiser.denoise(x, config.sigma.at(k));
    if (!denoised.same_geometry(x)) {
      throw Error(ErrorCode::kGeometryMismatch, "denoiser " + denoiser.name() + " changed frame geometry");
    }
    for (double v : denoised.samples()) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFinite, "denoiser " + denoiser.name() +
                                               " produced a non-finite sample at iteration " + std::to_string(k));
      }
    }
    const Frame projected = project_measurements(denoised, sensed);
    auto xs = x.samples();
    auto ps = projected.samples();
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] += config.damping * (ps[i] - xs[i]);
  }
  return x;
}

}  // namespace valcs
