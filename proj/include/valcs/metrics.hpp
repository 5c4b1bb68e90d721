#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "valcs/error.hpp"
#include "valcs/frame.hpp"
#include "valcs/sensing.hpp"

namespace valcs {

inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

// 10 log10(255^2 / MSE); +infinity for identical frames.
inline double psnr(const Frame& reference, const Frame& test) {
  require_same_geometry(reference, test, "psnr");
  if (reference.empty()) throw Error(ErrorCode::kInvalidArgument, "psnr of an empty frame");
  const auto a = reference.samples();
  const auto b = test.samples();
  double sse = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sse += d * d;
  }
  if (sse == 0.0) return kPsnrIdentical;
  const double mse = sse / static_cast<double>(a.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace detail {

inline constexpr std::array<double, 5> kMsSsimWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimWindowSigma = 1.5;

inline const std::array<double, kSsimWindow>& ssim_taps() {
  static const auto taps = [] {
    std::array<double, kSsimWindow> t{};
    double sum = 0.0;
    for (int k = 0; k < kSsimWindow; ++k) {
      const double x = k - kSsimWindow / 2;
      t[k] = std::exp(-x * x / (2.0 * kSsimWindowSigma * kSsimWindowSigma));
      sum += t[k];
    }
    for (double& v : t) v /= sum;
    return t;
  }();
  return taps;
}

// 'valid' separable Gaussian filtering.
inline Frame gaussian_valid(const Frame& x) {
  const auto& taps = ssim_taps();
  const std::size_t oh = x.height() - kSsimWindow + 1;
  const std::size_t ow = x.width() - kSsimWindow + 1;
  Frame tmp(x.height(), ow);
  for (std::size_t r = 0; r < x.height(); ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += taps[k] * x(r, c + k);
      tmp(r, c) = acc;
    }
  }
  Frame out(oh, ow);
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += taps[k] * tmp(r + k, c);
      out(r, c) = acc;
    }
  }
  return out;
}

inline Frame product(const Frame& a, const Frame& b) {
  Frame out(a.height(), a.width());
  auto sa = a.samples();
  auto sb = b.samples();
  auto so = out.samples();
  for (std::size_t i = 0; i < so.size(); ++i) so[i] = sa[i] * sb[i];
  return out;
}

// 2x2 box average followed by decimation.
inline Frame downsample(const Frame& x) {
  Frame out(x.height() / 2, x.width() / 2);
  for (std::size_t r = 0; r < out.height(); ++r) {
    for (std::size_t c = 0; c < out.width(); ++c) {
      out(r, c) = 0.25 * (x(2 * r, 2 * c) + x(2 * r, 2 * c + 1) + x(2 * r + 1, 2 * c) + x(2 * r + 1, 2 * c + 1));
    }
  }
  return out;
}

struct SsimTerms {
  double ssim;                // mean of luminance * contrast-structure
  double contrast_structure;  // mean of contrast-structure alone
};

// Window means over all valid positions. The
// expressions are written so that swapping a and b gives bit-identical terms.
inline SsimTerms ssim_terms(const Frame& a, const Frame& b) {
  constexpr double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double c2 = (0.03 * 255.0) * (0.03 * 255.0);
  const Frame mu_a = gaussian_valid(a);
  const Frame mu_b = gaussian_valid(b);
  const Frame e_aa = gaussian_valid(product(a, a));
  const Frame e_bb = gaussian_valid(product(b, b));
  const Frame e_ab = gaussian_valid(product(a, b));
  double ssim_sum = 0.0;
  double cs_sum = 0.0;
  const std::size_t n = mu_a.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double ma = mu_a.samples()[i];
    const double mb = mu_b.samples()[i];
    const double va = e_aa.samples()[i] - ma * ma;
    const double vb = e_bb.samples()[i] - mb * mb;
    const double cov = e_ab.samples()[i] - ma * mb;
    const double l = (2.0 * (ma * mb) + c1) / ((ma * ma + mb * mb) + c1);
    const double cs = (2.0 * cov + c2) / ((va + vb) + c2);
    ssim_sum += l * cs;
    cs_sum += cs;
  }
  return {ssim_sum / static_cast<double>(n), cs_sum / static_cast<double>(n)};
}

}  // namespace detail

// Number of dyadic scales (at most 5) for which the 11x11 window still fits.
inline int ms_ssim_scale_count(std::size_t height, std::size_t width) {
  int scales = 0;
  while (scales < 5 && height >= static_cast<std::size_t>(detail::kSsimWindow) &&
         width >= static_cast<std::size_t>(detail::kSsimWindow)) {
    ++scales;
    height /= 2;
    width /= 2;
  }
  return scales;
}

// Multi-scale SSIM with the standard five weights and 11-tap Gaussian window.
// Frames too small for five scales use as many as fit, with the weights
// renormalised to sum to one. The coarsest scale contributes the full SSIM
// mean, the others the contrast-structure mean; each term is floored at zero
// so the score stays in [0, 1].
inline double ms_ssim(const Frame& reference, const Frame& test) {
  require_same_geometry(reference, test, "ms_ssim");
  const int scales = ms_ssim_scale_count(reference.height(), reference.width());
  if (scales == 0) {
    throw Error(ErrorCode::kInvalidArgument, "frame smaller than the 11x11 MS-SSIM window");
  }
  double weight_sum = 0.0;
  for (int s = 0; s < scales; ++s) weight_sum += detail::kMsSsimWeights[s];

  Frame a = reference;
  Frame b = test;
  double score = 1.0;
  for (int s = 0; s < scales; ++s) {
    const auto terms = detail::ssim_terms(a, b);
    const double w = detail::kMsSsimWeights[s] / weight_sum;
    if (s == scales - 1) {
      score *= std::pow(std::max(terms.ssim, 0.0), w);
    } else {
      score *= std::pow(std::max(terms.contrast_structure, 0.0), w);
      a = detail::downsample(a);
      b = detail::downsample(b);
    }
  }
  return std::clamp(score, 0.0, 1.0);
}

struct FrameInfo {
  FrameKind kind = FrameKind::kKey;
  double realized_ratio = 0.0;
};

struct FrameQuality {
  std::size_t index = 0;
  FrameKind kind = FrameKind::kKey;
  double realized_ratio = 0.0;
  double psnr = 0.0;
  double ms_ssim = 0.0;
};

struct QualityAverages {
  std::size_t frames = 0;
  double realized_ratio = 0.0;
  double psnr = 0.0;
  double ms_ssim = 0.0;
};

struct QualityReport {
  std::vector<FrameQuality> frames;
  QualityAverages all;
  QualityAverages key;
  QualityAverages nonkey;
};

namespace detail {
inline QualityAverages average_of(const std::vector<FrameQuality>& rows, const FrameKind* only) {
  QualityAverages avg;
  for (const auto& r : rows) {
    if (only && r.kind != *only) continue;
    ++avg.frames;
    avg.realized_ratio += r.realized_ratio;
    avg.psnr += r.psnr;
    avg.ms_ssim += r.ms_ssim;
  }
  if (avg.frames > 0) {
    const double n = static_cast<double>(avg.frames);
    avg.realized_ratio /= n;
    avg.psnr /= n;
    avg.ms_ssim /= n;
  }
  return avg;
}
}  // namespace detail

inline QualityReport evaluate_sequence(const std::vector<Frame>& originals, const std::vector<Frame>& decoded,
                                       const std::vector<FrameInfo>& info) {
  if (originals.size() != decoded.size() || originals.size() != info.size()) {
    throw Error(ErrorCode::kInvalidArgument, "sequence lengths differ: " + std::to_string(originals.size()) +
                                                 " original, " + std::to_string(decoded.size()) + " decoded, " +
                                                 std::to_string(info.size()) + " metadata");
  }
  QualityReport report;
  for (std::size_t i = 0; i < originals.size(); ++i) {
    report.frames.push_back({i, info[i].kind, info[i].realized_ratio, psnr(originals[i], decoded[i]),
                             ms_ssim(originals[i], decoded[i])});
  }
  const FrameKind key = FrameKind::kKey;
  const FrameKind nonkey = FrameKind::kNonKey;
  report.all = detail::average_of(report.frames, nullptr);
  report.key = detail::average_of(report.frames, &key);
  report.nonkey = detail::average_of(report.frames, &nonkey);
  return report;
}

namespace detail {
inline std::string fmt_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}
}  // namespace detail

// CSV: frame,kind,delta_realized,psnr,ms_ssim; one row per frame followed by
// a single "average" row.
inline std::string quality_csv(const QualityReport& report) {
  std::ostringstream out;
  out << "frame,kind,delta_realized,psnr,ms_ssim\n";
  for (const auto& r : report.frames) {
    out << r.index << ',' << to_string(r.kind) << ',' << detail::fmt_number(r.realized_ratio) << ','
        << detail::fmt_number(r.psnr) << ',' << detail::fmt_number(r.ms_ssim) << '\n';
  }
  out << "average,all," << detail::fmt_number(report.all.realized_ratio) << ','
      << detail::fmt_number(report.all.psnr) << ',' << detail::fmt_number(report.all.ms_ssim) << '\n';
  return out.str();
}

// Parses a CSV produced by quality_csv back into per-frame rows (the average
// row is dropped).
inline std::vector<FrameQuality> parse_quality_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("frame,kind,delta_realized,psnr,ms_ssim", 0) != 0) {
    throw Error(ErrorCode::kMalformedStream, "quality CSV: missing header");
  }
  std::vector<FrameQuality> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw Error(ErrorCode::kMalformedStream, "quality CSV: expected 5 columns");
    if (cells[0] == "average") continue;
    try {
      FrameQuality q;
      q.index = std::stoul(cells[0]);
      q.kind = cells[1] == "key" ? FrameKind::kKey : FrameKind::kNonKey;
      q.realized_ratio = std::stod(cells[2]);
      q.psnr = std::stod(cells[3]);
      q.ms_ssim = std::stod(cells[4]);
      rows.push_back(q);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kMalformedStream, "quality CSV: bad number in line '" + line + "'");
    }
  }
  return rows;
}

struct SequenceSummary {
  std::string name;
  double psnr = 0.0;
  double ms_ssim = 0.0;
};

// One row per sequence plus the mean over sequences, in the "PSNR, MS-SSIM"
// cell layout of a comparison table.
inline std::string summary_table(const std::vector<SequenceSummary>& rows) {
  std::ostringstream out;
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  double psnr_sum = 0.0;
  double ssim_sum = 0.0;
  char buf[128];
  auto line = [&](const std::string& name, double p, double s) {
    std::snprintf(buf, sizeof buf, "%-*s  %.2f, %.4f\n", static_cast<int>(width), name.c_str(), p, s);
    out << buf;
  };
  std::snprintf(buf, sizeof buf, "%-*s  %s\n", static_cast<int>(width), "Sequence", "PSNR, MS-SSIM");
  out << buf;
  for (const auto& r : rows) {
    line(r.name, r.psnr, r.ms_ssim);
    psnr_sum += r.psnr;
    ssim_sum += r.ms_ssim;
  }
  if (!rows.empty()) {
    const double n = static_cast<double>(rows.size());
    line("Average", psnr_sum / n, ssim_sum / n);
  }
  return out.str();
}

}  // namespace valcs
