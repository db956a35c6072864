#ifndef LADDERKIT_LADDER_HPP_
#define LADDERKIT_LADDER_HPP_

#include <span>
#include <string>
#include <vector>

#include "ladderkit/model_bundle.hpp"

namespace ladderkit {

inline constexpr double kInfiniteTime = 1e30;  // "no budget" sentinel

// Table 1 style defaults: the full resolution set and the 12-step
// bitrate grid.
std::vector<int> default_resolutions();
std::vector<double> default_bitrates_mbps();

enum class FallbackPolicy { kDrop, kLowestResolution };

struct LadderConfig {
  std::vector<int> resolutions = default_resolutions();  // ascending
  std::vector<double> bitrates_mbps = default_bitrates_mbps();  // ascending
  double max_enc_time_s = kInfiniteTime;  // tau_E
  double max_dec_time_s = kInfiniteTime;  // tau_D
  int max_resolution = 2160;              // r_max, must be in resolutions
  double jnd_db = 0.0;                    // 0 disables pruning
  double max_quality_db = 100.0;          // perceptually lossless threshold
  std::string codec = "vvenc";
  std::string result_csv = "results.csv";
  FallbackPolicy fallback = FallbackPolicy::kDrop;

  void validate() const;  // throws ConfigError
};

enum class RungStatus {
  kSelected,
  kDroppedTimeBudget,
  kDroppedJnd,
  kDroppedLossless,
};
const char* to_string(RungStatus status);

// One ladder rung. For a time-budget drop the fields record the
// unconstrained best candidate so the CSV shows how far over budget it
// was.
struct Representation {
  double target_bitrate_mbps = 0.0;
  int resolution = 0;  // luma lines
  int qp = 0;
  double predicted_xpsnr_db = 0.0;
  double predicted_enc_time_s = 0.0;
  double predicted_dec_time_s = 0.0;
  RungStatus status = RungStatus::kSelected;
  double prediction_time_ms = 0.0;  // wall time spent predicting this rung
};

struct BitrateLadder {
  std::string segment_id;
  std::vector<Representation> rungs;  // ascending target bitrate
};

// Per-resolution predictions evaluated during resolution selection.
struct ResolutionCandidate {
  int resolution = 0;
  double xpsnr_db = 0.0;
  double enc_time_s = 0.0;
  double dec_time_s = 0.0;
  int qp = 0;
  bool feasible = false;  // enc <= tau_E and dec <= tau_D
};

struct ResolutionChoice {
  bool selected = false;
  int resolution = 0;  // chosen, or the unconstrained best when dropped
  std::vector<ResolutionCandidate> candidates;  // diagnostics, all r <= r_max
};

// Argmax of predicted XPSNR over resolutions <= r_max whose predicted
// times fit the budgets. Ties break toward the lower resolution. With an
// empty feasible set the fallback policy applies: drop the rung or take
// the first (lowest) resolution in the list.
ResolutionChoice select_best_resolution(const ModelBundle& bundle,
                                        const SegmentFeatures& f,
                                        double bitrate_mbps,
                                        const LadderConfig& cfg);

// Rungs ascending by bitrate must all be selected on entry. jnd == 0
// returns the input unchanged. Otherwise the first rung is always kept
// and a later rung is kept iff its XPSNR exceeds the last kept rung's by
// at least jnd; the list ends early right after a kept rung crosses
// max_xpsnr. Non-kept rungs are marked dropped_jnd / dropped_lossless in
// place; the kept rungs are returned.
std::vector<Representation> jnd_elimination(std::span<Representation> rungs,
                                            double jnd_db,
                                            double max_xpsnr_db);

BitrateLadder build_ladder(const ModelBundle& bundle, const SegmentFeatures& f,
                           const LadderConfig& cfg,
                           const std::string& segment_id);

inline constexpr const char* kResultsCsvHeader =
    "segment_id,bitrate_mbps,resolution,qp,pred_xpsnr,pred_enc_time_s,"
    "pred_dec_time_s,status";

// Writes every rung, dropped ones included, with its status.
void emit_results_csv(const BitrateLadder& ladder, const std::string& path);
void append_results_csv(const BitrateLadder& ladder, std::string& out);

// One encoder command line per selected rung; dropped rungs emit
// nothing. Only the "vvenc" template ships. `input_path` names the
// segment file; empty falls back to "<segment_id>.y4m".
std::vector<std::string> emit_encoder_commands(const BitrateLadder& ladder,
                                               const LadderConfig& cfg,
                                               const std::string& input_path =
                                                   std::string());

}  // namespace ladderkit

#endif  // LADDERKIT_LADDER_HPP_
