#ifndef LADDERKIT_MODEL_BUNDLE_HPP_
#define LADDERKIT_MODEL_BUNDLE_HPP_

#include <array>
#include <optional>
#include <string>

#include "ladderkit/complexity.hpp"
#include "ladderkit/gbt.hpp"

namespace ladderkit {

// Resolutions are named by luma-line height; widths follow 16:9.
inline constexpr std::array<int, 7> kSupportedResolutions = {
    360, 432, 540, 720, 1080, 1440, 2160};

bool is_supported_resolution(int luma_lines);
int width_for_height(int luma_lines);
std::string supported_resolutions_string();

// The trained predictors behind the ladder decisions. The XPSNR model
// maps (7 features, r normalized, bitrate Mbps) to dB. The six anchor
// models map (7 features, r normalized) to log2 Mbps or log2 seconds at
// the q_min / q_max anchors; QP, bitrate and time in between come from
// the log-linear QP relationship.
struct ModelBundle {
  TreeEnsemble xpsnr_model;
  TreeEnsemble bitrate_at_qmin;
  TreeEnsemble bitrate_at_qmax;
  TreeEnsemble enctime_at_qmin;
  TreeEnsemble enctime_at_qmax;
  TreeEnsemble dectime_at_qmin;
  TreeEnsemble dectime_at_qmax;
  int q_min = 10;
  int q_max = 50;
  double r_norm_base = 2160.0;

  // Packed evaluation forms produced by seal(); predictions use them when
  // present and fall back to the authoring trees otherwise. train_bundle
  // and load_bundle seal automatically; hand-assembled bundles may call
  // seal() themselves once their models stop changing.
  CompiledEnsemble xpsnr_fast;
  CompiledEnsemble bitrate_at_qmin_fast;
  CompiledEnsemble bitrate_at_qmax_fast;
  CompiledEnsemble enctime_at_qmin_fast;
  CompiledEnsemble enctime_at_qmax_fast;
  CompiledEnsemble dectime_at_qmin_fast;
  CompiledEnsemble dectime_at_qmax_fast;
  void seal();

  bool loaded() const { return xpsnr_model.feature_count > 0; }
  double normalize_resolution(int luma_lines) const {
    return luma_lines / r_norm_base;
  }
};

// Value on the line through (q_min, v_at_qmin) and (q_max, v_at_qmax) at
// QP q. Callers pass log-domain values for bitrate and time.
double qp_line(double v_at_qmin, double v_at_qmax, double q, double q_min,
               double q_max);

// Solved QP for a target bitrate plus the anchor diagnostics.
struct QpSolution {
  double qp_real = 0.0;  // clamped to [q_min, q_max], unrounded
  int qp = 0;            // rounded half away from zero
  double log2_bitrate_at_qmin = 0.0;  // raw anchor predictions
  double log2_bitrate_at_qmax = 0.0;
  bool anchors_clamped = false;  // anchors crossed and were clamped
};

double predict_xpsnr(const ModelBundle& bundle, const SegmentFeatures& f,
                     int resolution, double bitrate_mbps);
QpSolution solve_qp(const ModelBundle& bundle, const SegmentFeatures& f,
                    int resolution, double bitrate_mbps);
int predict_qp(const ModelBundle& bundle, const SegmentFeatures& f,
               int resolution, double bitrate_mbps);
// Time predictions interpolate at the unrounded QP.
double predict_enc_time(const ModelBundle& bundle, const SegmentFeatures& f,
                        int resolution, double bitrate_mbps);
double predict_dec_time(const ModelBundle& bundle, const SegmentFeatures& f,
                        int resolution, double bitrate_mbps);
// Variants that reuse an already-solved QP so callers needing both times
// pay for the bitrate anchors only once. Results are identical to the
// bitrate-taking forms.
double predict_enc_time(const ModelBundle& bundle, const SegmentFeatures& f,
                        int resolution, const QpSolution& sol);
double predict_dec_time(const ModelBundle& bundle, const SegmentFeatures& f,
                        int resolution, const QpSolution& sol);

// Bundle directory layout: one JSON model per role plus manifest.json
// {"q_min":10,"q_max":50,"r_norm_base":2160,"schema":"1"}.
void save_bundle(const ModelBundle& bundle, const std::string& dir,
                 std::optional<uint64_t> split_seed = std::nullopt);
ModelBundle load_bundle(const std::string& dir);

}  // namespace ladderkit

#endif  // LADDERKIT_MODEL_BUNDLE_HPP_
