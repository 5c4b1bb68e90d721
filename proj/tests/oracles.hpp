#pragma once

// Definition-level reference computations used only by tests. Nothing here
// calls the library's transform, so they stay independent of the code paths
// they check.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "valcs/frame.hpp"

namespace valcs::oracle {

// Plain B x B matrix of doubles, row-major.
using Grid = std::vector<std::vector<double>>;

inline Grid zeros(int n) { return Grid(n, std::vector<double>(n, 0.0)); }

inline double alpha(int k, int n) { return k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n); }

// X(u,v) = a(u) a(v) sum_i sum_j x(i,j) cos(pi (2i+1) u / 2n) cos(pi (2j+1) v / 2n)
inline Grid dct2(const Grid& x) {
  const int n = static_cast<int>(x.size());
  Grid out = zeros(n);
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          acc += x[i][j] * std::cos(std::numbers::pi * (2 * i + 1) * u / (2.0 * n)) *
                 std::cos(std::numbers::pi * (2 * j + 1) * v / (2.0 * n));
        }
      }
      out[u][v] = alpha(u, n) * alpha(v, n) * acc;
    }
  }
  return out;
}

inline Grid idct2(const Grid& coeffs) {
  const int n = static_cast<int>(coeffs.size());
  Grid out = zeros(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
          acc += alpha(u, n) * alpha(v, n) * coeffs[u][v] *
                 std::cos(std::numbers::pi * (2 * i + 1) * u / (2.0 * n)) *
                 std::cos(std::numbers::pi * (2 * j + 1) * v / (2.0 * n));
        }
      }
      out[i][j] = acc;
    }
  }
  return out;
}

// Indicator mask over natural positions, true = kept.
using Indicator = std::vector<std::vector<bool>>;

// JPEG zigzag written out independently: walk anti-diagonals, even sums
// travel up-right, odd sums down-left.
inline std::vector<std::pair<int, int>> zigzag(int n) {
  std::vector<std::pair<int, int>> out;
  int r = 0, c = 0;
  for (int k = 0; k < n * n; ++k) {
    out.emplace_back(r, c);
    if ((r + c) % 2 == 0) {
      if (c == n - 1) ++r;
      else if (r == 0) ++c;
      else { --r; ++c; }
    } else {
      if (r == n - 1) ++c;
      else if (c == 0) ++r;
      else { ++r; --c; }
    }
  }
  return out;
}

inline Indicator prefix_indicator(int n, int count) {
  Indicator m(n, std::vector<bool>(n, false));
  const auto zz = zigzag(n);
  for (int k = 0; k < count; ++k) m[zz[k].first][zz[k].second] = true;
  return m;
}

inline Grid masked(const Grid& g, const Indicator& keep) {
  Grid out = g;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (!keep[i][j]) out[i][j] = 0.0;
    }
  }
  return out;
}

// Non-distributed hybrid DPCM/DCT coder for one block. The key block keeps
// its L+M lowpass coefficients; the difference between the non-key block and
// the key reconstruction keeps L coefficients; the decoder adds the decoded
// difference back onto the key reconstruction.
inline Grid dpcm_encoder_side(const Grid& key, const Grid& nonkey, const Indicator& key_mask,
                              const Indicator& nonkey_mask) {
  const int n = static_cast<int>(key.size());
  const Grid key_hat = idct2(masked(dct2(key), key_mask));
  Grid delta = zeros(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) delta[i][j] = nonkey[i][j] - key_hat[i][j];
  }
  const Grid delta_hat = idct2(masked(dct2(delta), nonkey_mask));
  Grid out = zeros(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out[i][j] = key_hat[i][j] + delta_hat[i][j];
  }
  return out;
}

inline Grid tile_of(const Frame& f, std::size_t r0, std::size_t c0, int n) {
  Grid g = zeros(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g[i][j] = f(r0 + i, c0 + j);
  }
  return g;
}

// Multi-scale SSIM evaluated straight from its definition: a full 2D
// Gaussian window (not separable passes), explicit window sums, 2x2 averaging
// between scales.
inline double ms_ssim(const Grid& a0, const Grid& b0, int scales) {
  const double weights[] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  double wsum = 0.0;
  for (int s = 0; s < scales; ++s) wsum += weights[s];
  double win[11][11];
  double total = 0.0;
  for (int i = 0; i < 11; ++i) {
    for (int j = 0; j < 11; ++j) {
      win[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2.0 * 1.5 * 1.5));
      total += win[i][j];
    }
  }
  const double c1 = 6.5025, c2 = 58.5225;
  Grid a = a0, b = b0;
  double score = 1.0;
  for (int s = 0; s < scales; ++s) {
    const std::size_t h = a.size(), w = a[0].size();
    double ssim_sum = 0.0, cs_sum = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r + 11 <= h; ++r) {
      for (std::size_t c = 0; c + 11 <= w; ++c) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < 11; ++i) {
          for (int j = 0; j < 11; ++j) {
            const double g = win[i][j] / total;
            const double x = a[r + i][c + j], y = b[r + i][c + j];
            ma += g * x;
            mb += g * y;
            saa += g * x * x;
            sbb += g * y * y;
            sab += g * x * y;
          }
        }
        const double l = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        const double cs = (2 * (sab - ma * mb) + c2) / ((saa - ma * ma) + (sbb - mb * mb) + c2);
        ssim_sum += l * cs;
        cs_sum += cs;
        ++count;
      }
    }
    const double wt = weights[s] / wsum;
    if (s == scales - 1) {
      score *= std::pow(std::max(ssim_sum / count, 0.0), wt);
    } else {
      score *= std::pow(std::max(cs_sum / count, 0.0), wt);
      Grid da(h / 2, std::vector<double>(w / 2)), db = da;
      for (std::size_t r = 0; r < h / 2; ++r) {
        for (std::size_t c = 0; c < w / 2; ++c) {
          da[r][c] = (a[2 * r][2 * c] + a[2 * r][2 * c + 1] + a[2 * r + 1][2 * c] + a[2 * r + 1][2 * c + 1]) / 4;
          db[r][c] = (b[2 * r][2 * c] + b[2 * r][2 * c + 1] + b[2 * r + 1][2 * c] + b[2 * r + 1][2 * c + 1]) / 4;
        }
      }
      a = da;
      b = db;
    }
  }
  return score;
}

}  // namespace valcs::oracle
