#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "valcs/valcs.hpp"

namespace valcs::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VideoOptions {
  std::size_t width = 352;
  std::size_t height = 288;
  std::string format = "yuv420";

  VideoGeometry geometry() const {
    return {width, height, format == "y8" ? PixelFormat::kY8 : PixelFormat::kYuv420};
  }
};

inline void add_video_options(CLI::App* cmd, VideoOptions& v) {
  cmd->add_option("--width", v.width, "frame width of raw input")->capture_default_str();
  cmd->add_option("--height", v.height, "frame height of raw input")->capture_default_str();
  cmd->add_option("--format", v.format, "raw pixel layout")
      ->check(CLI::IsMember({"yuv420", "y8"}))
      ->capture_default_str();
}

inline std::string frame_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05zu.pgm", index);
  return buf;
}

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// --- encode ---------------------------------------------------------------

struct EncodeArgs {
  std::string input;
  std::string output;
  VideoOptions video;
  std::optional<std::size_t> frames;
  std::size_t gop = 8;
  double delta_key = 0.7;
  std::optional<double> delta_avg;
  std::optional<double> delta_nonkey;
  int block_size = 16;
  std::string alloc = "mdd";
};

inline Allocation parse_allocation(const std::string& s) {
  if (s == "thi") return Allocation::kThi;
  if (s == "fixed") return Allocation::kFixed;
  return Allocation::kMdd;
}

inline int run_encode(const EncodeArgs& a, std::ostream& out) {
  GopConfig cfg;
  cfg.gop_size = a.gop;
  cfg.key_ratio = a.delta_key;
  cfg.block_size = a.block_size;
  cfg.allocation = parse_allocation(a.alloc);
  try {
    if (a.delta_nonkey) {
      cfg.nonkey_ratio = *a.delta_nonkey;
    } else {
      cfg.nonkey_ratio = rate_split(a.delta_avg.value_or(0.175), a.gop, a.delta_key);
      out << "derived non-key ratio " << fixed(cfg.nonkey_ratio, 4) << " from average "
          << a.delta_avg.value_or(0.175) << '\n';
    }
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  const auto frames = read_y_sequence(fs::path(a.input), a.video.geometry(), a.frames);
  std::vector<SensedFrame> sensed;
  const auto t0 = std::chrono::steady_clock::now();
  const EncodedStream stream = encode_sequence(frames, cfg, &sensed);
  write_stream_file(a.output, stream);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  double key_sum = 0.0, nonkey_sum = 0.0;
  std::size_t keys = 0;
  for (const auto& s : sensed) {
    if (s.kind == FrameKind::kKey) {
      key_sum += s.realized_ratio();
      ++keys;
    } else {
      nonkey_sum += s.realized_ratio();
    }
  }
  const std::size_t nonkeys = sensed.size() - keys;
  out << "encoded " << sensed.size() << " frames (" << keys << " key) " << frames.front().width() << "x"
      << frames.front().height() << " B=" << cfg.block_size << " G=" << cfg.gop_size << " alloc=" << to_string(cfg.allocation)
      << " in " << fixed(seconds, 2) << " s\n";
  out << "realized ratio key " << fixed(keys ? key_sum / keys : 0.0, 4) << " non-key "
      << fixed(nonkeys ? nonkey_sum / nonkeys : 0.0, 4) << '\n';
  return kExitOk;
}

// --- decode ---------------------------------------------------------------

struct DecodeArgs {
  std::string input;
  std::string output_dir;
  std::string interp = "linear";
  std::string plugin_cmd;
  int plugin_timeout_ms = 30000;
  std::string recon = "fast";
  int ida_iters = 20;
  double ida_damping = 1.0;
  double ida_sigma = 10.0;
  double ida_sigma_decay = 1.0;
  std::string denoiser = "haar";
  std::string denoiser_cmd;
  std::optional<double> td;
  std::string mixing = "full";
};

inline int run_decode(const DecodeArgs& a, std::ostream& out, std::ostream& err) {
  if (a.interp == "external" && a.plugin_cmd.empty()) throw UsageError("--interp external needs --plugin-cmd");
  if (a.denoiser == "external" && a.denoiser_cmd.empty()) throw UsageError("--denoiser external needs --denoiser-cmd");

  DecoderOptions opts;
  opts.reconstruction = a.recon == "ida" ? Reconstruction::kIda : Reconstruction::kFast;
  opts.mixing = a.mixing == "key" ? MixingMask::kKeyMeasured : MixingMask::kFullComplement;
  opts.bpd_threshold = a.td;
  opts.ida.iterations = a.ida_iters;
  opts.ida.damping = a.ida_damping;
  opts.ida.sigma = {a.ida_sigma, a.ida_sigma_decay};
  if (opts.reconstruction == Reconstruction::kIda) {
    try {
      opts.ida.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }

  std::unique_ptr<Interpolator> interp;
  if (a.interp == "external") {
    PluginOptions p;
    p.command = a.plugin_cmd;
    p.timeout = std::chrono::milliseconds(a.plugin_timeout_ms);
    interp = std::make_unique<ExternalInterpolator>(p, &err);
  } else {
    interp = std::make_unique<LinearInterpolator>();
  }
  std::unique_ptr<Denoiser> denoiser;
  if (a.denoiser == "gaussian") denoiser = std::make_unique<GaussianDenoiser>();
  else if (a.denoiser == "identity") denoiser = std::make_unique<IdentityDenoiser>();
  else if (a.denoiser == "external") {
    PluginOptions p;
    p.command = a.denoiser_cmd;
    p.timeout = std::chrono::milliseconds(a.plugin_timeout_ms);
    denoiser = std::make_unique<ExternalDenoiser>(p);
  } else {
    denoiser = std::make_unique<HaarShrinkDenoiser>();
  }

  const EncodedStream stream = read_stream_file(a.input);
  fs::create_directories(a.output_dir);
  Decoder decoder(stream.header, opts, *interp, denoiser.get());
  std::size_t written = 0, degraded = 0;
  auto drain = [&] {
    for (const auto& f : decoder.take_ready()) {
      write_pgm(fs::path(a.output_dir) / frame_file_name(f.index), f.pixels);
      out << "frame " << f.index << ' ' << to_string(f.kind) << ' '
          << (f.provenance == Provenance::kKey ? "key-recon" : "bpd") << " ratio " << fixed(f.realized_ratio, 4)
          << (f.degraded ? " degraded" : "") << '\n';
      ++written;
      degraded += f.degraded ? 1 : 0;
    }
  };
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& payload : stream.frames) {
    decoder.push(payload);
    drain();
  }
  decoder.finish();
  drain();
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out << "decoded " << written << " frames to " << a.output_dir << " (" << interp->name() << " interpolation, "
      << (opts.reconstruction == Reconstruction::kIda ? "ida" : "fast") << " reconstruction, T_D "
      << opts.effective_bpd_threshold() << ") in " << fixed(seconds, 2) << " s\n";
  if (degraded) out << degraded << " frames used the linear fallback\n";
  return kExitOk;
}

// --- metrics --------------------------------------------------------------

struct MetricsArgs {
  std::string original;
  std::string decoded;
  std::string stream;
  std::string csv;
  VideoOptions video;
  std::optional<std::size_t> frames;
  std::size_t gop = 8;
};

inline std::vector<Frame> read_decoded(const fs::path& path, const VideoGeometry& geometry) {
  if (!fs::is_directory(path)) return read_y_sequence(path, geometry);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(path)) {
    if (e.path().extension() == ".pgm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::kEmptyInput, "no .pgm files in " + path.string());
  std::vector<Frame> frames;
  for (const auto& f : files) frames.push_back(read_pgm(f));
  return frames;
}

inline int run_metrics(const MetricsArgs& a, std::ostream& out) {
  auto originals = read_y_sequence(fs::path(a.original), a.video.geometry());
  auto decoded = read_decoded(a.decoded, a.video.geometry());
  std::size_t n = std::min(originals.size(), decoded.size());
  if (a.frames) n = std::min(n, *a.frames);
  if (!a.frames && originals.size() != decoded.size()) {
    throw Error(ErrorCode::kInvalidArgument, "original has " + std::to_string(originals.size()) +
                                                 " frames, decoded has " + std::to_string(decoded.size()) +
                                                 "; pass --frames to compare a prefix");
  }
  originals.resize(n);
  decoded.resize(n);

  std::vector<FrameInfo> info(n);
  if (!a.stream.empty()) {
    const EncodedStream s = read_stream_file(a.stream);
    const GridShape shape = s.header.shape();
    for (std::size_t i = 0; i < n && i < s.frames.size(); ++i) {
      std::size_t total = 0;
      for (auto c : s.frames[i].counts) total += c;
      info[i] = {s.frames[i].kind, static_cast<double>(total) / static_cast<double>(shape.coefficient_count())};
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) info[i].kind = kind_of_frame(i, a.gop);
  }

  const QualityReport report = evaluate_sequence(originals, decoded, info);
  const std::string csv = quality_csv(report);
  if (a.csv.empty()) {
    out << csv;
  } else {
    write_file_bytes(a.csv, std::vector<std::uint8_t>(csv.begin(), csv.end()));
  }
  out << "frames " << n << "  PSNR " << fixed(report.all.psnr, 2) << " dB  MS-SSIM " << fixed(report.all.ms_ssim, 4)
      << "  (key " << fixed(report.key.psnr, 2) << " dB, non-key " << fixed(report.nonkey.psnr, 2) << " dB)\n";
  return kExitOk;
}

// --- report ---------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> csvs;
  std::string output;
};

inline int run_report(const ReportArgs& a, std::ostream& out) {
  std::vector<SequenceSummary> rows;
  for (const auto& path : a.csvs) {
    const auto bytes = read_file_bytes(path);
    const auto frames = parse_quality_csv(std::string(bytes.begin(), bytes.end()));
    if (frames.empty()) throw Error(ErrorCode::kEmptyInput, path + " has no frame rows");
    SequenceSummary s{fs::path(path).stem().string(), 0.0, 0.0};
    for (const auto& f : frames) {
      s.psnr += f.psnr;
      s.ms_ssim += f.ms_ssim;
    }
    s.psnr /= static_cast<double>(frames.size());
    s.ms_ssim /= static_cast<double>(frames.size());
    rows.push_back(s);
  }
  const std::string table = summary_table(rows);
  if (a.output.empty()) {
    out << table;
  } else {
    write_file_bytes(a.output, std::vector<std::uint8_t>(table.begin(), table.end()));
  }
  return kExitOk;
}

// --- entry point ----------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive block compressive sensing video codec"};
  app.require_subcommand(1);

  EncodeArgs enc;
  auto* encode = app.add_subcommand("encode", "sense a raw video into a bitstream");
  encode->add_option("--input,-i", enc.input, "raw planar or Y4M video")->required();
  encode->add_option("--output,-o", enc.output, "bitstream path")->required();
  add_video_options(encode, enc.video);
  encode->add_option("--frames", enc.frames, "encode only the first N frames")->check(CLI::PositiveNumber);
  encode->add_option("--gop", enc.gop, "GOP size")->check(CLI::Range(2, 255))->capture_default_str();
  encode->add_option("--delta-key", enc.delta_key, "key-frame ratio")->capture_default_str();
  auto* avg = encode->add_option("--delta-avg", enc.delta_avg, "average ratio per GOP (default 0.175)");
  auto* nonkey = encode->add_option("--delta-nonkey", enc.delta_nonkey, "explicit non-key ratio");
  avg->excludes(nonkey);
  encode->add_option("--block-size", enc.block_size, "block size")
      ->check(CLI::IsMember({4, 8, 16, 32}))
      ->capture_default_str();
  encode->add_option("--alloc", enc.alloc, "non-key allocation")
      ->check(CLI::IsMember({"thi", "mdd", "fixed"}))
      ->capture_default_str();

  DecodeArgs dec;
  auto* decode = app.add_subcommand("decode", "reconstruct frames from a bitstream");
  decode->add_option("--input,-i", dec.input, "bitstream path")->required();
  decode->add_option("--output-dir,-o", dec.output_dir, "directory for PGM frames")->required();
  decode->add_option("--interp", dec.interp, "key-frame interpolation")
      ->check(CLI::IsMember({"linear", "external"}))
      ->capture_default_str();
  decode->add_option("--plugin-cmd", dec.plugin_cmd, "interpolation plugin command");
  decode->add_option("--plugin-timeout", dec.plugin_timeout_ms, "plugin timeout in ms")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  decode->add_option("--recon", dec.recon, "frame reconstruction")
      ->check(CLI::IsMember({"fast", "ida"}))
      ->capture_default_str();
  decode->add_option("--ida-iters", dec.ida_iters, "IDA iterations")->capture_default_str();
  decode->add_option("--ida-damping", dec.ida_damping, "IDA damping in (0, 1]")->capture_default_str();
  decode->add_option("--ida-sigma", dec.ida_sigma, "initial denoiser strength")->capture_default_str();
  decode->add_option("--ida-sigma-decay", dec.ida_sigma_decay, "per-iteration strength factor")->capture_default_str();
  decode->add_option("--denoiser", dec.denoiser, "IDA denoiser")
      ->check(CLI::IsMember({"haar", "gaussian", "identity", "external"}))
      ->capture_default_str();
  decode->add_option("--denoiser-cmd", dec.denoiser_cmd, "denoising plugin command");
  decode->add_option("--td", dec.td, "best-pixel threshold (default 25 fast, 10 ida)")->check(CLI::NonNegativeNumber);
  decode->add_option("--mixing", dec.mixing, "coefficient mixing mask")
      ->check(CLI::IsMember({"full", "key"}))
      ->capture_default_str();

  MetricsArgs met;
  auto* metrics = app.add_subcommand("metrics", "PSNR and MS-SSIM of decoded frames");
  metrics->add_option("--original", met.original, "original video")->required();
  metrics->add_option("--decoded", met.decoded, "decoded PGM directory or raw video")->required();
  metrics->add_option("--stream", met.stream, "bitstream for frame kinds and realized ratios");
  metrics->add_option("--csv", met.csv, "write the per-frame CSV here instead of stdout");
  metrics->add_option("--frames", met.frames, "compare only the first N frames")->check(CLI::PositiveNumber);
  metrics->add_option("--gop", met.gop, "GOP size used to label frames without --stream")
      ->check(CLI::Range(2, 255))
      ->capture_default_str();
  add_video_options(metrics, met.video);

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "summarise per-sequence CSVs");
  report->add_option("csv", rep.csvs, "metrics CSV files, one per sequence")->required()->check(CLI::ExistingFile);
  report->add_option("--output,-o", rep.output, "write the table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*encode) return run_encode(enc, out);
    if (*decode) return run_decode(dec, out, err);
    if (*metrics) return run_metrics(met, out);
    return run_report(rep, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const StreamError& e) {
    err << "error: " << e.what();
    if (e.frame_index()) err << " (frame " << *e.frame_index() << ")";
    err << '\n';
    return kExitFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace valcs::cli
