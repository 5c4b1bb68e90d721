#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "valcs/error.hpp"
#include "valcs/frame.hpp"
#include "valcs/ida.hpp"
#include "valcs/reconstruction.hpp"
#include "valcs/sensing.hpp"
#include "valcs/stream.hpp"
#include "valcs/transform.hpp"
#include "valcs/vfi.hpp"

namespace valcs {

enum class Reconstruction { kFast, kIda };
enum class MixingMask { kKeyMeasured, kFullComplement };

// Non-key ratio that keeps the GOP average at `average_ratio`:
// (key + (G - 1) * nonkey) / G = average.
inline double rate_split(double average_ratio, std::size_t gop_size, double key_ratio) {
  if (gop_size < 2) throw Error(ErrorCode::kInvalidConfig, "GOP size must be at least 2");
  require_ratio(average_ratio, "average ratio");
  require_ratio(key_ratio, "key ratio");
  const double g = static_cast<double>(gop_size);
  const double nonkey = (g * average_ratio - key_ratio) / (g - 1.0);
  if (!(nonkey > 0.0) || nonkey > key_ratio) {
    throw Error(ErrorCode::kInvalidConfig, "derived non-key ratio " + std::to_string(nonkey) +
                                               " is outside (0, key ratio]");
  }
  return nonkey;
}

// Sequence-level coding parameters (shared by encoder and decoder through the
// stream header).
struct GopConfig {
  std::size_t gop_size = 8;
  double key_ratio = 0.7;
  double nonkey_ratio = 0.1;
  int block_size = 16;
  Allocation allocation = Allocation::kMdd;

  static GopConfig from_average(std::size_t gop_size, double average_ratio, double key_ratio,
                                int block_size = 16, Allocation allocation = Allocation::kMdd) {
    return {gop_size, key_ratio, rate_split(average_ratio, gop_size, key_ratio), block_size, allocation};
  }

  double average_ratio() const {
    return (key_ratio + static_cast<double>(gop_size - 1) * nonkey_ratio) / static_cast<double>(gop_size);
  }

  void validate() const {
    if (gop_size < 2 || gop_size > 255) throw Error(ErrorCode::kInvalidConfig, "GOP size must lie in [2, 255]");
    require_ratio(key_ratio, "key ratio");
    require_ratio(nonkey_ratio, "non-key ratio");
    if (!is_supported_block_size(block_size)) {
      throw Error(ErrorCode::kInvalidConfig, "block size must be one of 4, 8, 16, 32");
    }
  }
};

struct DecoderOptions {
  Reconstruction reconstruction = Reconstruction::kFast;
  MixingMask mixing = MixingMask::kFullComplement;
  // Best-pixel threshold in 8-bit units; defaults to 25 (fast) or 10 (IDA).
  std::optional<double> bpd_threshold;
  IdaConfig ida;

  double effective_bpd_threshold() const {
    return bpd_threshold.value_or(reconstruction == Reconstruction::kIda ? 10.0 : 25.0);
  }
};

// Coefficient values travel as f32. Every allocation decision is made on the
// f32-rounded values so that the decoder, which only sees those, reaches the
// same plans.
inline double as_transmitted(double v) { return static_cast<double>(static_cast<float>(v)); }

namespace detail {

inline CoefficientVectors transmitted(CoefficientVectors v) {
  for (auto& block : v) {
    for (double& x : block) x = as_transmitted(x);
  }
  return v;
}

inline std::vector<Block> transmitted_planes(const SensedFrame& sensed) {
  std::vector<Block> planes = sensed.coefficient_planes();
  for (auto& p : planes) {
    for (double& x : p.values()) x = as_transmitted(x);
  }
  return planes;
}

}  // namespace detail

// Plan for one frame given its (f32-rounded) phase-1 values. Used verbatim by
// the encoder and, for MDD, by the decoder. A budget covering every
// coefficient senses the frame completely.
inline MeasurementPlan plan_frame(const GridShape& shape, FrameKind kind, double ratio,
                                  Allocation nonkey_allocation, const CoefficientVectors& phase1,
                                  const std::vector<Block>* key_planes) {
  const std::size_t budget = measurement_budget(shape, ratio);
  if (budget >= shape.coefficient_count()) return full_plan(shape);
  if (kind == FrameKind::kKey) return thi_allocate(shape, phase1, budget);
  switch (nonkey_allocation) {
    case Allocation::kThi: return thi_allocate(shape, phase1, budget);
    case Allocation::kFixed: return fixed_allocate(shape, ratio);
    case Allocation::kMdd:
      if (key_planes == nullptr) throw Error(ErrorCode::kInvalidArgument, "MDD needs key frame coefficients");
      return mdd_allocate(shape, phase1, *key_planes, budget);
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown allocation");
}

inline StreamHeader make_header(const GopConfig& config, std::size_t height, std::size_t width) {
  config.validate();
  if (height > 0xFFFF || width > 0xFFFF) throw Error(ErrorCode::kInvalidConfig, "frame too large for the bitstream");
  StreamHeader h;
  h.width = static_cast<std::uint16_t>(width);
  h.height = static_cast<std::uint16_t>(height);
  h.block_size = static_cast<std::uint8_t>(config.block_size);
  h.gop_size = static_cast<std::uint8_t>(config.gop_size);
  h.key_ratio = static_cast<float>(config.key_ratio);
  h.nonkey_ratio = static_cast<float>(config.nonkey_ratio);
  h.allocation = config.allocation;
  grid_shape_for(height, width, config.block_size);
  return h;
}

inline FrameKind kind_of_frame(std::size_t index, std::size_t gop_size) {
  return index % gop_size == 0 ? FrameKind::kKey : FrameKind::kNonKey;
}

// Stateful encoder: frame i of the sequence is a key frame iff i % G == 0.
// Non-key MDD frames use the most recent key frame as reference.
class Encoder {
 public:
  Encoder(const GopConfig& config, std::size_t height, std::size_t width)
      : header_(make_header(config, height, width)), shape_(header_.shape()) {}

  const StreamHeader& header() const noexcept { return header_; }

  SensedFrame sense(const Frame& frame) {
    if (frame.height() != header_.height || frame.width() != header_.width) {
      throw Error(ErrorCode::kGeometryMismatch, "frame " + std::to_string(index_) +
                                                    " changes the sequence geometry");
    }
    const FrameKind kind = kind_of_frame(index_, header_.gop_size);
    const double ratio = kind == FrameKind::kKey ? header_.key_ratio : header_.nonkey_ratio;
    const BlockGrid grid = partition(frame, header_.block_size);
    const std::size_t m1 = phase1_count_for_ratio(header_.block_size, ratio);
    const CoefficientVectors phase1 = detail::transmitted(sense_phase1(grid, m1));
    const MeasurementPlan plan =
        plan_frame(shape_, kind, ratio, header_.allocation, phase1, key_planes_ ? &*key_planes_ : nullptr);
    SensedFrame sensed = sense_with_plan(grid, plan, kind);
    if (kind == FrameKind::kKey) key_planes_ = detail::transmitted_planes(sensed);
    ++index_;
    return sensed;
  }

 private:
  StreamHeader header_;
  GridShape shape_;
  std::optional<std::vector<Block>> key_planes_;
  std::size_t index_ = 0;
};

inline EncodedStream encode_sequence(std::span<const Frame> frames, const GopConfig& config,
                                     std::vector<SensedFrame>* sensed_out = nullptr) {
  if (frames.empty()) throw Error(ErrorCode::kEmptyInput, "no frames to encode");
  Encoder encoder(config, frames.front().height(), frames.front().width());
  EncodedStream stream;
  stream.header = encoder.header();
  for (const Frame& f : frames) {
    SensedFrame sensed = encoder.sense(f);
    stream.frames.push_back(to_payload(sensed));
    if (sensed_out) sensed_out->push_back(std::move(sensed));
  }
  return stream;
}

// Decoder-side reconstruction of SensedFrames from payloads. Prefix plans are
// rebuilt from the transmitted counts; MDD plans are recomputed from the
// current key frame and the received phase-1 values and checked against the
// transmitted counts.
class StreamInterpreter {
 public:
  explicit StreamInterpreter(const StreamHeader& header) : header_(header), shape_(header.shape()) {
    if (header.gop_size < 2) throw Error(ErrorCode::kMalformedStream, "GOP size below 2");
    require_ratio(header.key_ratio, "key ratio");
    require_ratio(header.nonkey_ratio, "non-key ratio");
  }

  const StreamHeader& header() const noexcept { return header_; }
  const GridShape& shape() const noexcept { return shape_; }
  const std::optional<SensedFrame>& current_key() const noexcept { return key_; }

  SensedFrame recover(const FramePayload& payload) {
    const std::size_t index = index_++;
    if (payload.kind != kind_of_frame(index, header_.gop_size)) {
      throw StreamError(ErrorCode::kMalformedStream,
                        std::string("unexpected ") + to_string(payload.kind) + " frame", index);
    }
    if (payload.counts.size() != shape_.count()) {
      throw StreamError(ErrorCode::kMalformedStream, "block count mismatch", index);
    }
    std::size_t total = 0;
    for (auto c : payload.counts) {
      if (c > shape_.block_area()) throw StreamError(ErrorCode::kMalformedStream, "block count exceeds B^2", index);
      total += c;
    }
    if (total != payload.values.size()) {
      throw StreamError(ErrorCode::kMalformedStream, "value count does not match block counts", index);
    }

    const bool key = payload.kind == FrameKind::kKey;
    const double ratio = key ? header_.key_ratio : header_.nonkey_ratio;
    const std::size_t m1 = phase1_count_for_ratio(header_.block_size, ratio);
    const std::vector<std::size_t> counts(payload.counts.begin(), payload.counts.end());

    MeasurementPlan plan;
    const bool full = measurement_budget(shape_, ratio) >= shape_.coefficient_count();
    if (!key && !full && header_.allocation == Allocation::kMdd) {
      if (!key_) throw StreamError(ErrorCode::kMalformedStream, "MDD frame without a key frame", index);
      CoefficientVectors phase1(shape_.count());
      std::size_t offset = 0;
      for (std::size_t i = 0; i < shape_.count(); ++i) {
        if (counts[i] < m1) throw StreamError(ErrorCode::kPlanMismatch, "block holds fewer than m1 values", index);
        phase1[i].assign(payload.values.begin() + static_cast<std::ptrdiff_t>(offset),
                         payload.values.begin() + static_cast<std::ptrdiff_t>(offset + m1));
        for (double& v : phase1[i]) v = as_transmitted(v);
        offset += counts[i];
      }
      plan = plan_frame(shape_, payload.kind, ratio, header_.allocation, phase1, &*key_planes_);
      for (std::size_t i = 0; i < shape_.count(); ++i) {
        if (plan.blocks[i].count() != counts[i]) {
          throw StreamError(ErrorCode::kPlanMismatch,
                            "recomputed MDD plan disagrees with transmitted counts in block " + std::to_string(i),
                            index);
        }
      }
    } else if (full) {
      plan = full_plan(shape_);
      for (std::size_t i = 0; i < shape_.count(); ++i) {
        if (counts[i] != shape_.block_area()) {
          throw StreamError(ErrorCode::kPlanMismatch, "full-rate frame with a partial block", index);
        }
      }
    } else {
      const Allocation algorithm = key ? Allocation::kThi : header_.allocation;
      std::size_t phase1 = m1;
      if (algorithm == Allocation::kFixed) {
        phase1 = fixed_allocate(shape_, ratio).blocks.front().count();
      }
      for (std::size_t i = 0; i < shape_.count(); ++i) {
        if (counts[i] < phase1 || (algorithm == Allocation::kFixed && counts[i] != phase1)) {
          throw StreamError(ErrorCode::kPlanMismatch, "block count inconsistent with the phase-1 count", index);
        }
      }
      plan = prefix_plan_from_counts(shape_, algorithm, phase1, counts);
    }

    SensedFrame sensed;
    sensed.plan = std::move(plan);
    sensed.frame_height = header_.height;
    sensed.frame_width = header_.width;
    sensed.kind = payload.kind;
    sensed.values.resize(shape_.count());
    std::size_t offset = 0;
    for (std::size_t i = 0; i < shape_.count(); ++i) {
      sensed.values[i].assign(payload.values.begin() + static_cast<std::ptrdiff_t>(offset),
                              payload.values.begin() + static_cast<std::ptrdiff_t>(offset + counts[i]));
      offset += counts[i];
    }
    if (key) {
      key_ = sensed;
      key_planes_ = detail::transmitted_planes(sensed);
    }
    return sensed;
  }

 private:
  StreamHeader header_;
  GridShape shape_;
  std::optional<SensedFrame> key_;
  std::optional<std::vector<Block>> key_planes_;
  std::size_t index_ = 0;
};

// Decoder-side temporal DPCM by coefficient mixing. Per block the non-key
// frame's measured coefficients (f_L) are combined with the reference frame's
// coefficients on f_M, then inverted:
//   kKeyMeasured:    f_M = key plan positions minus f_L
//   kFullComplement: f_M = every position not in f_L
// Cropped margins are taken from the reference.
inline Frame dpcm_mix(const SensedFrame& nonkey, const Frame& reference, MixingMask mode,
                      const MeasurementPlan* key_plan = nullptr) {
  if (reference.height() != nonkey.frame_height || reference.width() != nonkey.frame_width) {
    throw Error(ErrorCode::kGeometryMismatch, "reference does not match the non-key frame");
  }
  if (mode == MixingMask::kKeyMeasured) {
    if (key_plan == nullptr) throw Error(ErrorCode::kInvalidArgument, "key-measured mixing needs the key plan");
    if (!(key_plan->shape == nonkey.plan.shape)) {
      throw Error(ErrorCode::kGeometryMismatch, "key plan grid differs from the non-key grid");
    }
  }
  const auto& shape = nonkey.plan.shape;
  const int b = shape.block_size;
  const auto& kernel = dct_kernel(b);
  Frame out = reference;
  for (std::size_t i = 0; i < shape.count(); ++i) {
    const std::size_t r0 = (i / shape.block_cols) * b;
    const std::size_t c0 = (i % shape.block_cols) * b;
    Block tile(b);
    for (int r = 0; r < b; ++r) {
      for (int c = 0; c < b; ++c) tile(r, c) = reference(r0 + r, c0 + c);
    }
    const Block ref_coeffs = dct2_forward(tile, kernel);
    const PositionMask& lowpass = nonkey.plan.blocks[i].positions;
    const PositionMask midband = mode == MixingMask::kKeyMeasured
                                     ? mask_difference(key_plan->blocks[i].positions, lowpass)
                                     : mask_complement(lowpass);
    Block mixed = nonkey.coefficient_plane(i);
    for (std::size_t k = 0; k < mixed.area(); ++k) {
      if (midband.contains(k)) mixed[k] += ref_coeffs[k];
    }
    const Block back = dct2_inverse(mixed, kernel);
    for (int r = 0; r < b; ++r) {
      for (int c = 0; c < b; ++c) out(r0 + r, c0 + c) = back(r, c);
    }
  }
  return out;
}

// Per pixel: the DPCM output where it agrees with the interpolated reference
// to within the threshold, the plain non-key reconstruction elsewhere.
inline Frame best_pixel_discriminator(const Frame& dpcm, const Frame& reference, const Frame& nonkey,
                                      double threshold) {
  require_same_geometry(dpcm, reference, "best pixel discriminator");
  require_same_geometry(dpcm, nonkey, "best pixel discriminator");
  Frame out(dpcm.height(), dpcm.width());
  auto d = dpcm.samples();
  auto r = reference.samples();
  auto k = nonkey.samples();
  auto o = out.samples();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::abs(r[i] - d[i]) < threshold ? d[i] : k[i];
  return out;
}

enum class Provenance { kKey, kBpdOutput };

struct DecodedFrame {
  std::size_t index = 0;
  FrameKind kind = FrameKind::kKey;
  Provenance provenance = Provenance::kKey;
  Frame pixels;  // clamped to [0, 255], not rounded
  double realized_ratio = 0.0;
  bool degraded = false;
};

// Streaming decoder. Key frames are reconstructed on arrival; non-key frames
// are buffered until the next key frame arrives (or the stream ends), which
// bounds the look-ahead to one GOP. Output is in frame order.
class Decoder {
 public:
  Decoder(const StreamHeader& header, DecoderOptions options, Interpolator& interpolator,
          Denoiser* denoiser = nullptr)
      : interpreter_(header), options_(std::move(options)), interpolator_(interpolator), denoiser_(denoiser) {
    if (options_.reconstruction == Reconstruction::kIda) {
      options_.ida.validate();
      if (denoiser_ == nullptr) {
        owned_denoiser_ = std::make_unique<HaarShrinkDenoiser>();
        denoiser_ = owned_denoiser_.get();
      }
    }
  }

  void push(const FramePayload& payload) {
    const std::size_t index = next_index_++;
    SensedFrame sensed = interpreter_.recover(payload);
    Frame recon = reconstruct(sensed);
    if (sensed.kind == FrameKind::kKey) {
      if (key_) flush(&recon);
      key_ = Pending{index, std::move(sensed), std::move(recon)};
    } else {
      pending_.push_back(Pending{index, std::move(sensed), std::move(recon)});
    }
  }

  // Emits everything still buffered; non-key frames with no following key
  // frame use the current key frame as their reference.
  void finish() {
    if (key_) flush(nullptr);
    key_.reset();
  }

  std::vector<DecodedFrame> take_ready() {
    std::vector<DecodedFrame> out(std::make_move_iterator(ready_.begin()), std::make_move_iterator(ready_.end()));
    ready_.clear();
    return out;
  }

 private:
  struct Pending {
    std::size_t index;
    SensedFrame sensed;
    Frame recon;  // unclamped
  };

  Frame reconstruct(const SensedFrame& sensed) {
    if (options_.reconstruction == Reconstruction::kIda) return ida_reconstruct(sensed, *denoiser_, options_.ida);
    return reconstruct_fast(sensed);
  }

  void flush(const Frame* next_key) {
    const Pending& key = *key_;
    ready_.push_back({key.index, FrameKind::kKey, Provenance::kKey, clamp_to_8bit_range(key.recon),
                      key.sensed.realized_ratio(), false});
    if (pending_.empty()) return;

    std::vector<Frame> references;
    bool degraded = false;
    if (next_key) {
      InterpolationRequest request{key.recon, *next_key,
                                   gop_timestamps(interpreter_.header().gop_size, pending_.size())};
      InterpolationResult result = interpolator_.interpolate(request);
      if (result.frames.size() != pending_.size()) {
        throw Error(ErrorCode::kPlugin, "interpolator returned the wrong number of frames");
      }
      references = std::move(result.frames);
      degraded = result.degraded;
    } else {
      references.assign(pending_.size(), key.recon);
    }

    const double threshold = options_.effective_bpd_threshold();
    for (std::size_t j = 0; j < pending_.size(); ++j) {
      const Pending& p = pending_[j];
      const Frame mixed = dpcm_mix(p.sensed, references[j], options_.mixing, &key.sensed.plan);
      const Frame chosen = best_pixel_discriminator(mixed, references[j], p.recon, threshold);
      ready_.push_back({p.index, FrameKind::kNonKey, Provenance::kBpdOutput, clamp_to_8bit_range(chosen),
                        p.sensed.realized_ratio(), degraded});
    }
    pending_.clear();
  }

  StreamInterpreter interpreter_;
  DecoderOptions options_;
  Interpolator& interpolator_;
  Denoiser* denoiser_;
  std::unique_ptr<Denoiser> owned_denoiser_;
  std::optional<Pending> key_;
  std::vector<Pending> pending_;
  std::deque<DecodedFrame> ready_;
  std::size_t next_index_ = 0;
};

inline std::vector<DecodedFrame> decode_sequence(const EncodedStream& stream, const DecoderOptions& options,
                                                 Interpolator& interpolator, Denoiser* denoiser = nullptr) {
  Decoder decoder(stream.header, options, interpolator, denoiser);
  std::vector<DecodedFrame> out;
  for (const auto& payload : stream.frames) {
    decoder.push(payload);
    for (auto& f : decoder.take_ready()) out.push_back(std::move(f));
  }
  decoder.finish();
  for (auto& f : decoder.take_ready()) out.push_back(std::move(f));
  return out;
}

}  // namespace valcs
