#include "ladderkit/complexity.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ladderkit/dct.hpp"
#include "ladderkit/errors.hpp"

namespace ladderkit {
namespace {

// Copies the 32x32 block at (bx, by) out of a plane, shifting 10-bit
// samples down to the 8-bit scale. Samples outside the plane are filled
// with the mean of the in-plane samples so border blocks gain no
// synthetic edges.
void extract_block(const std::vector<uint16_t>& plane, int width, int height,
                   int bx, int by, int shift,
                   std::array<double, kBlockSamples>& block) {
  const int x0 = bx * kBlockSize;
  const int y0 = by * kBlockSize;
  const int w = std::min(kBlockSize, width - x0);
  const int h = std::min(kBlockSize, height - y0);
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    const uint16_t* row = plane.data() + static_cast<size_t>(y0 + y) * width;
    for (int x = 0; x < w; ++x) {
      const double s = static_cast<double>(row[x0 + x] >> shift);
      block[static_cast<size_t>(y) * kBlockSize + x] = s;
      sum += s;
    }
  }
  if (w == kBlockSize && h == kBlockSize) return;
  const double mean = sum / (static_cast<double>(w) * h);
  for (int y = 0; y < kBlockSize; ++y) {
    for (int x = 0; x < kBlockSize; ++x) {
      if (x >= w || y >= h) {
        block[static_cast<size_t>(y) * kBlockSize + x] = mean;
      }
    }
  }
}

struct PlaneAccumulator {
  double texture_sum = 0.0;  // sum of per-block texture energies
  double level_sum = 0.0;    // sum of per-block |DC| / w
  long block_count = 0;
};

// Per-frame stats of one plane, in raster block order. `texture_out`,
// when non-null, receives the per-block texture energies for the
// temporal gradient.
void accumulate_plane(const std::vector<uint16_t>& plane, int width,
                      int height, int shift, PlaneAccumulator& acc,
                      std::vector<double>* texture_out) {
  const int blocks_x = (width + kBlockSize - 1) / kBlockSize;
  const int blocks_y = (height + kBlockSize - 1) / kBlockSize;
  std::array<double, kBlockSamples> block;
  for (int by = 0; by < blocks_y; ++by) {
    for (int bx = 0; bx < blocks_x; ++bx) {
      extract_block(plane, width, height, bx, by, shift, block);
      const BlockDctStats stats = block_dct_stats(block);
      acc.texture_sum += stats.texture;
      acc.level_sum += std::fabs(stats.dc) / kBlockSize;
      ++acc.block_count;
      if (texture_out) texture_out->push_back(stats.texture);
    }
  }
}

}  // namespace

SegmentFeatures analyze_segment(const FrameSequence& frames) {
  if (frames.frames.empty()) {
    throw ConfigError("analyze_segment: empty frame sequence");
  }
  const int shift = frames.bit_depth > 8 ? frames.bit_depth - 8 : 0;
  const double w2 = static_cast<double>(kBlockSamples);

  PlaneAccumulator y_acc, u_acc, v_acc;
  double gradient_sum = 0.0;
  long gradient_count = 0;

  std::vector<double> prev_texture, cur_texture;
  for (size_t t = 0; t < frames.frames.size(); ++t) {
    const Frame& f = frames.frames[t];
    cur_texture.clear();
    accumulate_plane(f.y, frames.width, frames.height, shift, y_acc,
                     &cur_texture);
    accumulate_plane(f.u, frames.chroma_width(), frames.chroma_height(),
                     shift, u_acc, nullptr);
    accumulate_plane(f.v, frames.chroma_width(), frames.chroma_height(),
                     shift, v_acc, nullptr);
    if (t > 0) {
      for (size_t k = 0; k < cur_texture.size(); ++k) {
        gradient_sum += std::fabs(cur_texture[k] - prev_texture[k]);
        ++gradient_count;
      }
    }
    std::swap(prev_texture, cur_texture);
  }

  SegmentFeatures out;
  out.luma_energy = y_acc.texture_sum / y_acc.block_count / w2;
  out.luma_level = y_acc.level_sum / y_acc.block_count;
  out.chroma_u_energy = u_acc.texture_sum / u_acc.block_count / w2;
  out.chroma_v_energy = v_acc.texture_sum / v_acc.block_count / w2;
  out.chroma_u_level = u_acc.level_sum / u_acc.block_count;
  out.chroma_v_level = v_acc.level_sum / v_acc.block_count;
  // First frame has no predecessor and contributes nothing to h.
  out.temporal_gradient =
      gradient_count > 0 ? gradient_sum / gradient_count / w2 : 0.0;
  return out;
}

void features_to_csv(const SegmentFeatures& features,
                     const std::string& segment_id, const std::string& path) {
  if (segment_id.find(',') != std::string::npos ||
      segment_id.find('\n') != std::string::npos) {
    throw ConfigError("segment id must not contain commas or newlines: " +
                      segment_id);
  }
  bool need_header = true;
  {
    std::ifstream probe(path, std::ios::binary | std::ios::ate);
    if (probe && probe.tellg() > 0) need_header = false;
  }
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError(path + ": cannot open for writing");
  if (need_header) out << kFeatureCsvHeader << "\n";
  char buf[256];
  const auto a = features.as_array();
  std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", a[0],
                a[1], a[2], a[3], a[4], a[5], a[6]);
  out << segment_id << ',' << buf << "\n";
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

std::vector<std::pair<std::string, SegmentFeatures>> read_features_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line) || line != kFeatureCsvHeader) {
    throw IoError(path + ": missing or unexpected feature CSV header");
  }
  std::vector<std::pair<std::string, SegmentFeatures>> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    if (!std::getline(cells, cell, ',')) continue;
    std::array<double, 7> a{};
    for (int i = 0; i < 7; ++i) {
      std::string num;
      if (!std::getline(cells, num, ',')) {
        throw IoError(path + ": row " + std::to_string(line_no) +
                      " has fewer than 8 columns");
      }
      const char* first = num.data();
      const char* last = num.data() + num.size();
      auto [ptr, ec] = std::from_chars(first, last, a[i]);
      if (ec != std::errc() || ptr != last) {
        throw IoError(path + ": row " + std::to_string(line_no) +
                      " has a non-numeric cell '" + num + "'");
      }
    }
    rows.emplace_back(cell, SegmentFeatures::from_array(a));
  }
  return rows;
}

}  // namespace ladderkit
