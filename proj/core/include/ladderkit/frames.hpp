#ifndef LADDERKIT_FRAMES_HPP_
#define LADDERKIT_FRAMES_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ladderkit {

// One planar 4:2:0 frame. Samples are stored widened to 16 bits so 8-bit
// and 10-bit content share one layout; bit depth lives on the sequence.
struct Frame {
  std::vector<uint16_t> y;
  std::vector<uint16_t> u;
  std::vector<uint16_t> v;
};

struct FrameSequence {
  int width = 0;   // luma samples per row, even, >= 64
  int height = 0;  // luma rows, even, >= 64
  int bit_depth = 8;  // 8 or 10
  std::vector<Frame> frames;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int chroma_width() const { return width / 2; }
  int chroma_height() const { return height / 2; }
};

enum class MediaFormat { kY4m, kRaw };

struct RawDims {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
};

// Loads a segment from a Y4M file (header-parsed) or a raw planar YUV
// 4:2:0 file with explicit dimensions. 10-bit samples are little-endian,
// two bytes each. Throws IoError on malformed headers, truncated frames,
// or unsupported chroma formats.
FrameSequence load_segment(const std::string& path, MediaFormat format,
                           std::optional<RawDims> raw_dims = std::nullopt);

}  // namespace ladderkit

#endif  // LADDERKIT_FRAMES_HPP_
