#include "ladderkit/dct.hpp"

#include <cmath>

namespace ladderkit {
namespace {

constexpr int kW = kBlockSize;

// Basis matrix of the orthonormal type-II DCT:
//   C[u][x] = a(u) * cos(pi * (2x+1) * u / (2w)),
//   a(0) = sqrt(1/w), a(u>0) = sqrt(2/w).
struct DctBasis {
  double c[kW][kW];
  DctBasis() {
    const double pi = std::acos(-1.0);
    for (int u = 0; u < kW; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / kW) : std::sqrt(2.0 / kW);
      for (int x = 0; x < kW; ++x) {
        c[u][x] = a * std::cos(pi * (2 * x + 1) * u / (2.0 * kW));
      }
    }
  }
};

const DctBasis& basis() {
  static const DctBasis b;
  return b;
}

// Energy weight for AC position (i,j). i*j <= (w-1)^2 < w^2, so the
// argument of exp is 1 - ((i*j)/w^2)^2.
struct TextureWeights {
  double w[kW][kW];
  TextureWeights() {
    for (int i = 0; i < kW; ++i) {
      for (int j = 0; j < kW; ++j) {
        const double f = static_cast<double>(i) * j / (kW * kW);
        w[i][j] = std::exp(std::fabs(f * f - 1.0));
      }
    }
  }
};

const TextureWeights& weights() {
  static const TextureWeights tw;
  return tw;
}

}  // namespace

void dct2d_32(std::span<const double, kBlockSamples> block,
              std::span<double, kBlockSamples> coeffs) {
  const DctBasis& b = basis();
  // Rows first: g[u][y] = sum_x C[u][x] * f[x][y].
  double g[kW][kW];
  for (int u = 0; u < kW; ++u) {
    for (int y = 0; y < kW; ++y) {
      double acc = 0.0;
      for (int x = 0; x < kW; ++x) {
        acc += b.c[u][x] * block[static_cast<size_t>(x) * kW + y];
      }
      g[u][y] = acc;
    }
  }
  // Columns: D[u][v] = sum_y C[v][y] * g[u][y].
  for (int u = 0; u < kW; ++u) {
    for (int v = 0; v < kW; ++v) {
      double acc = 0.0;
      for (int y = 0; y < kW; ++y) {
        acc += b.c[v][y] * g[u][y];
      }
      coeffs[static_cast<size_t>(u) * kW + v] = acc;
    }
  }
}

BlockDctStats block_dct_stats(std::span<const double, kBlockSamples> block) {
  std::array<double, kBlockSamples> coeffs;
  dct2d_32(block, coeffs);
  const TextureWeights& tw = weights();
  BlockDctStats stats;
  stats.dc = coeffs[0];
  double acc = 0.0;
  for (int i = 0; i < kW; ++i) {
    for (int j = 0; j < kW; ++j) {
      if (i == 0 && j == 0) continue;
      acc += tw.w[i][j] * std::fabs(coeffs[static_cast<size_t>(i) * kW + j]);
    }
  }
  stats.texture = acc;
  return stats;
}

double block_texture_energy(std::span<const double, kBlockSamples> block) {
  return block_dct_stats(block).texture;
}

}  // namespace ladderkit
