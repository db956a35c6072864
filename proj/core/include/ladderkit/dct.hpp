#ifndef LADDERKIT_DCT_HPP_
#define LADDERKIT_DCT_HPP_

#include <array>
#include <cstddef>
#include <span>

namespace ladderkit {

// Analysis block size. Border blocks are padded to this size with the
// block mean before transforming.
inline constexpr int kBlockSize = 32;
inline constexpr int kBlockSamples = kBlockSize * kBlockSize;

// Orthonormal 2-D type-II DCT of a 32x32 block, row-major in and out.
// Separable implementation; matches the direct O(w^4) summation within
// 1e-9 per coefficient.
void dct2d_32(std::span<const double, kBlockSamples> block,
              std::span<double, kBlockSamples> coeffs);

// Per-block DCT-domain statistics feeding the complexity features.
struct BlockDctStats {
  double texture = 0.0;  // weighted sum of |AC| coefficients, >= 0
  double dc = 0.0;       // DCT(0,0)
};

BlockDctStats block_dct_stats(std::span<const double, kBlockSamples> block);

// Texture energy of one block: sum over AC positions (i,j) != (0,0) of
// exp(|((i*j)/w^2)^2 - 1|) * |DCT(i,j)|. A constant block scores 0.
double block_texture_energy(std::span<const double, kBlockSamples> block);

}  // namespace ladderkit

#endif  // LADDERKIT_DCT_HPP_
