#include "ladderkit/frames.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ladderkit/errors.hpp"

namespace ladderkit {
namespace {

void check_geometry(const std::string& path, int width, int height) {
  if (width < 64 || height < 64) {
    throw IoError(path + ": frame size " + std::to_string(width) + "x" +
                  std::to_string(height) + " below 64x64 minimum");
  }
  if (width % 2 != 0 || height % 2 != 0) {
    throw IoError(path + ": odd frame dimensions are not 4:2:0 representable");
  }
}

// Reads one plane of w*h samples at the given bit depth. Returns false on
// clean EOF before the first byte, throws on a partial plane.
bool read_plane(std::ifstream& in, const std::string& path, int w, int h,
                int bit_depth, std::vector<uint16_t>& out) {
  const size_t n = static_cast<size_t>(w) * h;
  const size_t bytes = bit_depth > 8 ? n * 2 : n;
  std::vector<char> buf(bytes);
  in.read(buf.data(), static_cast<std::streamsize>(bytes));
  const auto got = static_cast<size_t>(in.gcount());
  if (got == 0) return false;
  if (got < bytes) throw IoError(path + ": truncated frame");
  out.resize(n);
  if (bit_depth > 8) {
    const uint16_t max = static_cast<uint16_t>((1 << bit_depth) - 1);
    for (size_t i = 0; i < n; ++i) {
      const uint16_t lo = static_cast<uint8_t>(buf[2 * i]);
      const uint16_t hi = static_cast<uint8_t>(buf[2 * i + 1]);
      const uint16_t s = static_cast<uint16_t>(lo | (hi << 8));
      if (s > max) {
        throw IoError(path + ": sample value " + std::to_string(s) +
                      " exceeds " + std::to_string(bit_depth) + "-bit range");
      }
      out[i] = s;
    }
  } else {
    for (size_t i = 0; i < n; ++i) {
      out[i] = static_cast<uint8_t>(buf[i]);
    }
  }
  return true;
}

// Reads Y, U, V planes of one frame. Returns false on clean EOF at the
// frame boundary.
bool read_frame(std::ifstream& in, const std::string& path, int width,
                int height, int bit_depth, Frame& frame) {
  if (!read_plane(in, path, width, height, bit_depth, frame.y)) return false;
  if (!read_plane(in, path, width / 2, height / 2, bit_depth, frame.u) ||
      !read_plane(in, path, width / 2, height / 2, bit_depth, frame.v)) {
    throw IoError(path + ": truncated frame");
  }
  return true;
}

FrameSequence load_y4m(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");

  std::string header;
  if (!std::getline(in, header) || header.rfind("YUV4MPEG2", 0) != 0) {
    throw IoError(path + ": malformed Y4M header (missing YUV4MPEG2 magic)");
  }

  FrameSequence seq;
  std::string colorspace = "420";  // Y4M default when no C tag is present
  std::istringstream tags(header.substr(9));
  std::string tag;
  while (tags >> tag) {
    switch (tag[0]) {
      case 'W': seq.width = std::atoi(tag.c_str() + 1); break;
      case 'H': seq.height = std::atoi(tag.c_str() + 1); break;
      case 'C': colorspace = tag.substr(1); break;
      default: break;  // F, I, A, X tags do not affect analysis
    }
  }
  if (seq.width <= 0 || seq.height <= 0) {
    throw IoError(path + ": malformed Y4M header (missing W or H tag)");
  }
  if (colorspace == "420" || colorspace == "420jpeg" ||
      colorspace == "420mpeg2" || colorspace == "420paldv") {
    seq.bit_depth = 8;
  } else if (colorspace == "420p10") {
    seq.bit_depth = 10;
  } else {
    throw IoError(path + ": unsupported chroma format C" + colorspace +
                  " (only 4:2:0 is supported)");
  }
  check_geometry(path, seq.width, seq.height);

  std::string frame_line;
  while (std::getline(in, frame_line)) {
    if (frame_line.empty()) continue;
    if (frame_line.rfind("FRAME", 0) != 0) {
      throw IoError(path + ": malformed Y4M frame marker");
    }
    Frame frame;
    if (!read_frame(in, path, seq.width, seq.height, seq.bit_depth, frame)) {
      throw IoError(path + ": truncated frame");
    }
    seq.frames.push_back(std::move(frame));
  }
  if (seq.frames.empty()) throw IoError(path + ": no frames in Y4M file");
  return seq;
}

FrameSequence load_raw(const std::string& path, const RawDims& dims) {
  if (dims.bit_depth != 8 && dims.bit_depth != 10) {
    throw ConfigError("raw input bit depth must be 8 or 10, got " +
                      std::to_string(dims.bit_depth));
  }
  check_geometry(path, dims.width, dims.height);

  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError(path + ": cannot open file");
  const auto file_size = static_cast<uint64_t>(in.tellg());
  in.seekg(0);

  const uint64_t luma = static_cast<uint64_t>(dims.width) * dims.height;
  const uint64_t samples_per_frame = luma + luma / 2;
  const uint64_t frame_bytes =
      samples_per_frame * (dims.bit_depth > 8 ? 2 : 1);
  if (file_size == 0 || file_size % frame_bytes != 0) {
    throw IoError(path + ": truncated frame (file size " +
                  std::to_string(file_size) + " not a multiple of " +
                  std::to_string(frame_bytes) + "-byte frames)");
  }

  FrameSequence seq;
  seq.width = dims.width;
  seq.height = dims.height;
  seq.bit_depth = dims.bit_depth;
  const uint64_t n_frames = file_size / frame_bytes;
  seq.frames.reserve(n_frames);
  for (uint64_t i = 0; i < n_frames; ++i) {
    Frame frame;
    if (!read_frame(in, path, seq.width, seq.height, seq.bit_depth, frame)) {
      throw IoError(path + ": truncated frame");
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

}  // namespace

FrameSequence load_segment(const std::string& path, MediaFormat format,
                           std::optional<RawDims> raw_dims) {
  if (format == MediaFormat::kY4m) return load_y4m(path);
  if (!raw_dims) {
    throw ConfigError(path + ": raw input requires explicit dimensions");
  }
  return load_raw(path, *raw_dims);
}

}  // namespace ladderkit
