#ifndef LADDERKIT_TRAINING_HPP_
#define LADDERKIT_TRAINING_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "ladderkit/complexity.hpp"
#include "ladderkit/gbt.hpp"
#include "ladderkit/model_bundle.hpp"

namespace ladderkit {

// One encode observation, the row format produced by an encode farm
// sweeping every (resolution, QP) pair per segment. PSNR is recorded for
// schema fidelity; nothing downstream consumes it.
struct TrainingRecord {
  std::string segment_id;
  SegmentFeatures features;
  int resolution = 0;      // luma lines
  int qp = 0;              // in [q_min, q_max]
  double bitrate_mbps = 0.0;  // achieved bitrate b'
  double xpsnr_db = 0.0;      // x'
  double psnr_db = 0.0;       // p', recorded but unused
  double enc_time_s = 0.0;
  double dec_time_s = 0.0;
};

inline constexpr const char* kTrainingCsvHeader =
    "segment_id,E_Y,h,L_Y,E_U,E_V,L_U,L_V,resolution,qp,bitrate_mbps,"
    "xpsnr_db,psnr_db,enc_time_s,dec_time_s";

// Throws IoError naming the offending row on missing columns,
// non-numeric cells, or invariant violations (QP bounds, non-positive
// bitrate or times).
std::vector<TrainingRecord> ingest_training_csv(const std::string& path);
void write_training_csv(const std::vector<TrainingRecord>& records,
                        const std::string& path);

// Closed-form ground truth standing in for an encoder farm. Latent
// coefficients are smooth functions of the segment's complexity features
// so held-out segments stay predictable:
//   log2 bitrate is affine in QP (strictly decreasing) and in normalized
//   resolution; XPSNR follows a saturating curve in log bitrate whose
//   cap grows with resolution while its midpoint shifts right, creating
//   the convex-hull crossovers; log2 times are affine in QP and grow
//   superlinearly with pixel count.
class SyntheticOracle {
 public:
  double log2_bitrate(const SegmentFeatures& f, int resolution,
                      double qp) const;
  double xpsnr_at(const SegmentFeatures& f, int resolution,
                  double log2_bitrate_mbps) const;
  double log2_enc_time(const SegmentFeatures& f, int resolution,
                       double qp) const;
  double log2_dec_time(const SegmentFeatures& f, int resolution,
                       double qp) const;
  double psnr_at(const SegmentFeatures& f, int resolution,
                 double log2_bitrate_mbps) const;

  // Inverse of log2_bitrate in QP, clamped to [q_min, q_max].
  double qp_for_bitrate(const SegmentFeatures& f, int resolution,
                        double bitrate_mbps, double q_min,
                        double q_max) const;
};

struct SyntheticDatasetOptions {
  int n_segments = 200;
  std::vector<int> resolutions{kSupportedResolutions.begin(),
                               kSupportedResolutions.end()};
  std::vector<int> qps = {10, 20, 30, 40, 50};  // q_min, q_max + interior
  double noise = 0.0;  // bounded uniform noise on the recorded targets
  uint64_t seed = 7;
};

// Feature draws cover the empirically observed ranges (E_Y in [5,60],
// h in [0.5,20], L_Y in [40,200]); every record satisfies the oracle
// exactly when noise is 0. Fully deterministic for a fixed seed.
std::vector<TrainingRecord> generate_synthetic_dataset(
    const SyntheticOracle& oracle, const SyntheticDatasetOptions& options);

// Deterministic split with no segment on both sides.
struct SegmentSplit {
  std::vector<TrainingRecord> train;
  std::vector<TrainingRecord> holdout;
};
SegmentSplit split_by_segment(const std::vector<TrainingRecord>& records,
                              double holdout_fraction, uint64_t seed);

struct TrainOptions {
  GbtParams gbt;  // learning_rate 0.1, min_samples_leaf 2, 400 x depth 10
  int q_min = 10;
  int q_max = 50;
  double r_norm_base = 2160.0;
};

// Fits the seven ensembles: q_min rows feed the *_at_qmin anchors,
// q_max rows the *_at_qmax anchors (log2-domain targets), all rows the
// XPSNR model. Throws ModelError when a (segment, resolution) pair lacks
// an anchor row.
ModelBundle train_bundle(const std::vector<TrainingRecord>& records,
                         const TrainOptions& options = {});

struct ErrorStats {
  double mae = 0.0;
  double std_dev = 0.0;       // of the absolute errors
  double mean_rel_err = 0.0;  // meaningful for times and bitrate
};

struct EvalReport {
  ErrorStats qp;        // predict_qp at the achieved bitrate vs recorded QP
  ErrorStats xpsnr_db;
  ErrorStats enc_time_s;
  ErrorStats dec_time_s;
  size_t rows = 0;
};

EvalReport evaluate_bundle(const ModelBundle& bundle,
                           const std::vector<TrainingRecord>& holdout);

std::string format_report(const EvalReport& report);

}  // namespace ladderkit

#endif  // LADDERKIT_TRAINING_HPP_
