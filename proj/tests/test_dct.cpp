#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "ladderkit/dct.hpp"
#include "test_util.hpp"

using namespace ladderkit;

namespace {

constexpr int W = kBlockSize;

// Direct O(w^4) orthonormal type-II DCT, the reference the fast path
// must match.
void dct_oracle(const std::array<double, kBlockSamples>& block,
                std::array<double, kBlockSamples>& out) {
  static std::array<std::array<double, W>, W> cosine;  // [u][x]
  static bool init = false;
  if (!init) {
    for (int u = 0; u < W; ++u) {
      for (int x = 0; x < W; ++x) {
        cosine[u][x] = std::cos(M_PI * (2.0 * x + 1.0) * u / (2.0 * W));
      }
    }
    init = true;
  }
  const double a0 = std::sqrt(1.0 / W);
  const double a1 = std::sqrt(2.0 / W);
  for (int u = 0; u < W; ++u) {
    for (int v = 0; v < W; ++v) {
      double sum = 0.0;
      for (int x = 0; x < W; ++x) {
        for (int y = 0; y < W; ++y) {
          sum += block[x * W + y] * cosine[u][x] * cosine[v][y];
        }
      }
      out[u * W + v] = (u == 0 ? a0 : a1) * (v == 0 ? a0 : a1) * sum;
    }
  }
}

double texture_from_coeffs(const std::array<double, kBlockSamples>& coeffs) {
  double h = 0.0;
  for (int i = 0; i < W; ++i) {
    for (int j = 0; j < W; ++j) {
      if (i == 0 && j == 0) continue;
      const double ij = static_cast<double>(i) * j / (W * W);
      h += std::exp(std::fabs(ij * ij - 1.0)) * std::fabs(coeffs[i * W + j]);
    }
  }
  return h;
}

std::array<double, kBlockSamples> random_block(std::mt19937_64& rng) {
  std::array<double, kBlockSamples> block;
  for (double& s : block) s = testutil::uniform(rng, 0.0, 255.0);
  return block;
}

}  // namespace

TEST_CASE("constant block transforms to a lone DC coefficient") {
  std::array<double, kBlockSamples> block;
  block.fill(128.0);
  std::array<double, kBlockSamples> coeffs;
  dct2d_32(block, coeffs);

  // Orthonormal DC of a constant block is v * w.
  CHECK(coeffs[0] == doctest::Approx(128.0 * W).epsilon(1e-12));
  for (int k = 1; k < kBlockSamples; ++k) {
    CHECK(std::fabs(coeffs[k]) < 1e-9);
  }
  CHECK(block_texture_energy(block) < 1e-6);
}

TEST_CASE("separable DCT matches the direct-summation oracle") {
  std::mt19937_64 rng(11);
  std::array<double, kBlockSamples> coeffs, expected;
  for (int trial = 0; trial < 50; ++trial) {
    const auto block = random_block(rng);
    dct2d_32(block, coeffs);
    dct_oracle(block, expected);
    for (int k = 0; k < kBlockSamples; ++k) {
      REQUIRE(std::fabs(coeffs[k] - expected[k]) < 1e-9);
    }
  }
}

TEST_CASE("texture energy of a single-cycle cosine matches the oracle") {
  std::array<double, kBlockSamples> block;
  const double amplitude = 40.0;
  for (int x = 0; x < W; ++x) {
    for (int y = 0; y < W; ++y) {
      block[x * W + y] =
          128.0 + amplitude * std::cos(2.0 * M_PI * y / W);
    }
  }
  std::array<double, kBlockSamples> coeffs;
  dct_oracle(block, coeffs);
  const double expected = texture_from_coeffs(coeffs);
  CHECK(expected > 0.0);
  CHECK(block_texture_energy(block) ==
        doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("texture energy ignores a DC offset") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    auto block = random_block(rng);
    const double base = block_texture_energy(block);
    for (double& s : block) s += 10.0;
    CHECK(block_texture_energy(block) ==
          doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("block stats expose the DC term used for luminescence") {
  std::array<double, kBlockSamples> block;
  block.fill(100.0);
  const BlockDctStats stats = block_dct_stats(block);
  CHECK(stats.dc == doctest::Approx(100.0 * W).epsilon(1e-12));
  CHECK(stats.texture < 1e-6);
}

TEST_CASE("texture energy is non-negative on random blocks") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    CHECK(block_texture_energy(random_block(rng)) >= 0.0);
  }
}
