#ifndef LADDERKIT_COMPLEXITY_HPP_
#define LADDERKIT_COMPLEXITY_HPP_

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "ladderkit/frames.hpp"

namespace ladderkit {

// The seven DCT-energy spatiotemporal complexity features of a segment.
// All values are finite and non-negative; a segment of identical frames
// has temporal_gradient == 0 and a constant-valued segment has zero
// texture energies.
struct SegmentFeatures {
  double luma_energy = 0.0;        // E_Y
  double temporal_gradient = 0.0;  // h
  double luma_level = 0.0;         // L_Y
  double chroma_u_energy = 0.0;    // E_U
  double chroma_v_energy = 0.0;    // E_V
  double chroma_u_level = 0.0;     // L_U
  double chroma_v_level = 0.0;     // L_V

  // CSV column order: E_Y, h, L_Y, E_U, E_V, L_U, L_V.
  std::array<double, 7> as_array() const {
    return {luma_energy,     temporal_gradient, luma_level,
            chroma_u_energy, chroma_v_energy,   chroma_u_level,
            chroma_v_level};
  }
  static SegmentFeatures from_array(const std::array<double, 7>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
  }
};

// Computes the seven features over all frames. Blocks are 32x32 in raster
// order, border blocks padded with the block mean; 10-bit samples are
// right-shifted to the 8-bit scale first. Throws ConfigError on an empty
// sequence.
SegmentFeatures analyze_segment(const FrameSequence& frames);

inline constexpr const char* kFeatureCsvHeader =
    "segment_id,E_Y,h,L_Y,E_U,E_V,L_U,L_V";

// Appends one row to the feature CSV at `path`, writing the header first
// when the file is new or empty. Values are fixed 6-decimal.
void features_to_csv(const SegmentFeatures& features,
                     const std::string& segment_id, const std::string& path);

// Reads a whole feature CSV back. Rows are (segment_id, features).
std::vector<std::pair<std::string, SegmentFeatures>> read_features_csv(
    const std::string& path);

}  // namespace ladderkit

#endif  // LADDERKIT_COMPLEXITY_HPP_
