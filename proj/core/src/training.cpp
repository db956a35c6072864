#include "ladderkit/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "ladderkit/errors.hpp"

namespace ladderkit {
namespace {

// Latent content descriptors behind the oracle curves.
struct Latents {
  double complexity;  // ~ (0, 1], rises with texture and motion
  double brightness;  // L_Y rescaled to (0, 1)
};

Latents latents_of(const SegmentFeatures& f) {
  const double complexity =
      0.55 * (f.luma_energy / 60.0) + 0.35 * (f.temporal_gradient / 20.0) +
      0.10 * ((f.chroma_u_energy + f.chroma_v_energy) / 60.0);
  return {complexity, f.luma_level / 255.0};
}

double rho_of(int resolution) { return resolution / 2160.0; }

}  // namespace

double SyntheticOracle::log2_bitrate(const SegmentFeatures& f, int resolution,
                                     double qp) const {
  const Latents l = latents_of(f);
  const double intercept = 3.0 + 3.0 * l.complexity;
  const double qp_slope = 0.16 + 0.06 * l.complexity;
  const double res_slope = 0.8 + 0.8 * l.complexity;
  return intercept - qp_slope * qp + res_slope * rho_of(resolution);
}

double SyntheticOracle::xpsnr_at(const SegmentFeatures& f, int resolution,
                                 double log2_bitrate_mbps) const {
  const Latents l = latents_of(f);
  const double rho = rho_of(resolution);
  const double floor_db = 22.0;
  const double cap_db =
      38.0 + 6.0 * l.brightness + 3.0 * rho - 2.0 * l.complexity;
  const double midpoint = -2.0 + 2.5 * rho + 2.0 * l.complexity;
  const double slope = 1.4;  // per log2 Mbps
  const double s =
      1.0 / (1.0 + std::exp2(-slope * (log2_bitrate_mbps - midpoint)));
  return floor_db + (cap_db - floor_db) * s;
}

double SyntheticOracle::log2_enc_time(const SegmentFeatures& f,
                                      int resolution, double qp) const {
  const Latents l = latents_of(f);
  // Superlinear in pixel count: pixels ~ rho^2, exponent 1.1.
  return 8.3 + 1.2 * l.complexity + 2.2 * std::log2(rho_of(resolution)) -
         0.022 * qp;
}

double SyntheticOracle::log2_dec_time(const SegmentFeatures& f,
                                      int resolution, double qp) const {
  const Latents l = latents_of(f);
  return 2.0 + 1.0 * l.complexity + 2.0 * std::log2(rho_of(resolution)) -
         0.012 * qp;
}

double SyntheticOracle::psnr_at(const SegmentFeatures& f, int resolution,
                                double log2_bitrate_mbps) const {
  const Latents l = latents_of(f);
  return xpsnr_at(f, resolution, log2_bitrate_mbps) - 2.0 -
         1.5 * l.complexity;
}

double SyntheticOracle::qp_for_bitrate(const SegmentFeatures& f,
                                       int resolution, double bitrate_mbps,
                                       double q_min, double q_max) const {
  const Latents l = latents_of(f);
  const double intercept = 3.0 + 3.0 * l.complexity;
  const double qp_slope = 0.16 + 0.06 * l.complexity;
  const double res_slope = 0.8 + 0.8 * l.complexity;
  const double q = (intercept + res_slope * rho_of(resolution) -
                    std::log2(bitrate_mbps)) /
                   qp_slope;
  return std::clamp(q, q_min, q_max);
}

namespace {

// Platform-independent uniform double in [lo, hi).
double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

}  // namespace

std::vector<TrainingRecord> generate_synthetic_dataset(
    const SyntheticOracle& oracle, const SyntheticDatasetOptions& options) {
  if (options.n_segments < 1) {
    throw ConfigError("n_segments must be >= 1");
  }
  std::mt19937_64 rng(options.seed);
  std::vector<TrainingRecord> records;
  records.reserve(static_cast<size_t>(options.n_segments) *
                  options.resolutions.size() * options.qps.size());

  for (int s = 0; s < options.n_segments; ++s) {
    SegmentFeatures f;
    f.luma_energy = uniform(rng, 5.0, 60.0);
    f.temporal_gradient = uniform(rng, 0.5, 20.0);
    f.luma_level = uniform(rng, 40.0, 200.0);
    f.chroma_u_energy = uniform(rng, 2.0, 30.0);
    f.chroma_v_energy = uniform(rng, 2.0, 30.0);
    f.chroma_u_level = uniform(rng, 40.0, 180.0);
    f.chroma_v_level = uniform(rng, 40.0, 180.0);

    char id[32];
    std::snprintf(id, sizeof(id), "syn%04d", s);

    for (int r : options.resolutions) {
      for (int q : options.qps) {
        TrainingRecord rec;
        rec.segment_id = id;
        rec.features = f;
        rec.resolution = r;
        rec.qp = q;
        double log2_b = oracle.log2_bitrate(f, r, q);
        double x = oracle.xpsnr_at(f, r, log2_b);
        double log2_e = oracle.log2_enc_time(f, r, q);
        double log2_d = oracle.log2_dec_time(f, r, q);
        if (options.noise > 0.0) {
          log2_b += uniform(rng, -options.noise, options.noise);
          x += uniform(rng, -options.noise, options.noise);
          log2_e += uniform(rng, -options.noise, options.noise);
          log2_d += uniform(rng, -options.noise, options.noise);
        }
        rec.bitrate_mbps = std::exp2(log2_b);
        rec.xpsnr_db = x;
        rec.psnr_db = oracle.psnr_at(f, r, log2_b);
        rec.enc_time_s = std::exp2(log2_e);
        rec.dec_time_s = std::exp2(log2_d);
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

namespace {

double parse_cell(const std::string& cell, const std::string& path,
                  size_t row) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw IoError(path + ": row " + std::to_string(row) +
                  " has a non-numeric cell '" + cell + "'");
  }
  return v;
}

}  // namespace

std::vector<TrainingRecord> ingest_training_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open file");
  std::string line;
  if (!std::getline(in, line) || line != kTrainingCsvHeader) {
    throw IoError(path + ": missing or unexpected training CSV header");
  }

  std::vector<TrainingRecord> records;
  size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 15) {
      throw IoError(path + ": row " + std::to_string(row) + " has " +
                    std::to_string(cells.size()) + " columns, expected 15");
    }
    TrainingRecord rec;
    rec.segment_id = cells[0];
    std::array<double, 7> a{};
    for (int i = 0; i < 7; ++i) a[i] = parse_cell(cells[1 + i], path, row);
    rec.features = SegmentFeatures::from_array(a);
    rec.resolution = static_cast<int>(parse_cell(cells[8], path, row));
    rec.qp = static_cast<int>(parse_cell(cells[9], path, row));
    rec.bitrate_mbps = parse_cell(cells[10], path, row);
    rec.xpsnr_db = parse_cell(cells[11], path, row);
    rec.psnr_db = parse_cell(cells[12], path, row);
    rec.enc_time_s = parse_cell(cells[13], path, row);
    rec.dec_time_s = parse_cell(cells[14], path, row);

    if (rec.qp < 10 || rec.qp > 50) {
      throw IoError(path + ": row " + std::to_string(row) + ": qp " +
                    std::to_string(rec.qp) + " outside [10,50]");
    }
    if (!(rec.bitrate_mbps > 0.0)) {
      throw IoError(path + ": row " + std::to_string(row) +
                    ": bitrate must be positive");
    }
    if (!(rec.enc_time_s > 0.0) || !(rec.dec_time_s > 0.0)) {
      throw IoError(path + ": row " + std::to_string(row) +
                    ": times must be positive");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_training_csv(const std::vector<TrainingRecord>& records,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << kTrainingCsvHeader << "\n";
  char buf[512];
  for (const TrainingRecord& rec : records) {
    const auto a = rec.features.as_array();
    std::snprintf(buf, sizeof(buf),
                  "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%d,%.6f,%.6f,"
                  "%.6f,%.6f,%.6f\n",
                  rec.segment_id.c_str(), a[0], a[1], a[2], a[3], a[4], a[5],
                  a[6], rec.resolution, rec.qp, rec.bitrate_mbps,
                  rec.xpsnr_db, rec.psnr_db, rec.enc_time_s, rec.dec_time_s);
    out << buf;
  }
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

SegmentSplit split_by_segment(const std::vector<TrainingRecord>& records,
                              double holdout_fraction, uint64_t seed) {
  if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0) {
    throw ConfigError("holdout fraction must be in (0,1)");
  }
  std::vector<std::string> ids;  // first-appearance order
  std::set<std::string> seen;
  for (const TrainingRecord& rec : records) {
    if (seen.insert(rec.segment_id).second) ids.push_back(rec.segment_id);
  }
  if (ids.size() < 2) {
    throw ConfigError("need at least 2 segments to split");
  }

  // Hand-rolled Fisher-Yates so the shuffle is identical across
  // standard-library implementations.
  std::mt19937_64 rng(seed);
  for (size_t i = ids.size() - 1; i > 0; --i) {
    const size_t j = static_cast<size_t>(rng() % (i + 1));
    std::swap(ids[i], ids[j]);
  }

  const size_t n_holdout = std::max<size_t>(
      1, static_cast<size_t>(std::llround(ids.size() * holdout_fraction)));
  std::set<std::string> holdout_ids(ids.end() - n_holdout, ids.end());

  SegmentSplit split;
  for (const TrainingRecord& rec : records) {
    if (holdout_ids.count(rec.segment_id)) {
      split.holdout.push_back(rec);
    } else {
      split.train.push_back(rec);
    }
  }
  return split;
}

namespace {

std::array<double, 8> anchor_row(const TrainingRecord& rec,
                                 double r_norm_base) {
  const auto a = rec.features.as_array();
  return {a[0], a[1], a[2], a[3],
          a[4], a[5], a[6], rec.resolution / r_norm_base};
}

}  // namespace

ModelBundle train_bundle(const std::vector<TrainingRecord>& records,
                         const TrainOptions& options) {
  if (records.empty()) throw ModelError("no training records");

  // Every (segment, resolution) pair needs both anchor rows.
  std::map<std::pair<std::string, int>, std::pair<bool, bool>> anchors;
  for (const TrainingRecord& rec : records) {
    auto& flags = anchors[{rec.segment_id, rec.resolution}];
    if (rec.qp == options.q_min) flags.first = true;
    if (rec.qp == options.q_max) flags.second = true;
  }
  for (const auto& [key, flags] : anchors) {
    if (!flags.first) {
      throw ModelError("missing q_min anchor for segment " + key.first +
                       " at resolution " + std::to_string(key.second));
    }
    if (!flags.second) {
      throw ModelError("missing q_max anchor for segment " + key.first +
                       " at resolution " + std::to_string(key.second));
    }
  }

  TrainMatrix xpsnr_data;
  TrainMatrix bitrate_qmin, bitrate_qmax;
  TrainMatrix enctime_qmin, enctime_qmax;
  TrainMatrix dectime_qmin, dectime_qmax;

  for (const TrainingRecord& rec : records) {
    const auto a = rec.features.as_array();
    const std::array<double, 9> xrow = {
        a[0], a[1], a[2], a[3], a[4], a[5], a[6],
        rec.resolution / options.r_norm_base, rec.bitrate_mbps};
    xpsnr_data.push_row(xrow, rec.xpsnr_db);

    // Interior QPs only inform the XPSNR model; the anchors are pinned
    // to the q_min / q_max rows.
    if (rec.qp != options.q_min && rec.qp != options.q_max) continue;
    const auto arow = anchor_row(rec, options.r_norm_base);
    if (rec.qp == options.q_min) {
      bitrate_qmin.push_row(arow, std::log2(rec.bitrate_mbps));
      enctime_qmin.push_row(arow, std::log2(rec.enc_time_s));
      dectime_qmin.push_row(arow, std::log2(rec.dec_time_s));
    }
    if (rec.qp == options.q_max) {
      bitrate_qmax.push_row(arow, std::log2(rec.bitrate_mbps));
      enctime_qmax.push_row(arow, std::log2(rec.enc_time_s));
      dectime_qmax.push_row(arow, std::log2(rec.dec_time_s));
    }
  }

  ModelBundle bundle;
  bundle.q_min = options.q_min;
  bundle.q_max = options.q_max;
  bundle.r_norm_base = options.r_norm_base;
  bundle.xpsnr_model = fit(xpsnr_data, options.gbt);
  bundle.bitrate_at_qmin = fit(bitrate_qmin, options.gbt);
  bundle.bitrate_at_qmax = fit(bitrate_qmax, options.gbt);
  bundle.enctime_at_qmin = fit(enctime_qmin, options.gbt);
  bundle.enctime_at_qmax = fit(enctime_qmax, options.gbt);
  bundle.dectime_at_qmin = fit(dectime_qmin, options.gbt);
  bundle.dectime_at_qmax = fit(dectime_qmax, options.gbt);
  bundle.seal();
  return bundle;
}

namespace {

ErrorStats stats_of(const std::vector<double>& abs_errors,
                    const std::vector<double>& rel_errors) {
  ErrorStats s;
  if (abs_errors.empty()) return s;
  double sum = 0.0;
  for (double e : abs_errors) sum += e;
  s.mae = sum / abs_errors.size();
  double var = 0.0;
  for (double e : abs_errors) var += (e - s.mae) * (e - s.mae);
  s.std_dev = std::sqrt(var / abs_errors.size());
  if (!rel_errors.empty()) {
    double rsum = 0.0;
    for (double e : rel_errors) rsum += e;
    s.mean_rel_err = rsum / rel_errors.size();
  }
  return s;
}

}  // namespace

EvalReport evaluate_bundle(const ModelBundle& bundle,
                           const std::vector<TrainingRecord>& holdout) {
  if (holdout.empty()) throw ConfigError("empty holdout set");

  std::vector<double> qp_err, xpsnr_err, enc_err, enc_rel, dec_err, dec_rel;
  for (const TrainingRecord& rec : holdout) {
    const int qp_pred =
        predict_qp(bundle, rec.features, rec.resolution, rec.bitrate_mbps);
    qp_err.push_back(std::fabs(qp_pred - rec.qp));

    const double x_pred = predict_xpsnr(bundle, rec.features, rec.resolution,
                                        rec.bitrate_mbps);
    xpsnr_err.push_back(std::fabs(x_pred - rec.xpsnr_db));

    const double e_pred = predict_enc_time(bundle, rec.features,
                                           rec.resolution, rec.bitrate_mbps);
    enc_err.push_back(std::fabs(e_pred - rec.enc_time_s));
    enc_rel.push_back(std::fabs(e_pred - rec.enc_time_s) / rec.enc_time_s);

    const double d_pred = predict_dec_time(bundle, rec.features,
                                           rec.resolution, rec.bitrate_mbps);
    dec_err.push_back(std::fabs(d_pred - rec.dec_time_s));
    dec_rel.push_back(std::fabs(d_pred - rec.dec_time_s) / rec.dec_time_s);
  }

  EvalReport report;
  report.qp = stats_of(qp_err, {});
  report.xpsnr_db = stats_of(xpsnr_err, {});
  report.enc_time_s = stats_of(enc_err, enc_rel);
  report.dec_time_s = stats_of(dec_err, dec_rel);
  report.rows = holdout.size();
  return report;
}

std::string format_report(const EvalReport& report) {
  char buf[512];
  std::snprintf(
      buf, sizeof(buf),
      "rows=%zu\n"
      "enc_time : MAE %.2f s (std %.2f, rel %.1f%%)\n"
      "dec_time : MAE %.3f s (std %.3f, rel %.1f%%)\n"
      "qp       : MAE %.2f (std %.2f)\n"
      "xpsnr    : MAE %.3f dB (std %.3f)\n",
      report.rows, report.enc_time_s.mae, report.enc_time_s.std_dev,
      report.enc_time_s.mean_rel_err * 100.0, report.dec_time_s.mae,
      report.dec_time_s.std_dev, report.dec_time_s.mean_rel_err * 100.0,
      report.qp.mae, report.qp.std_dev, report.xpsnr_db.mae,
      report.xpsnr_db.std_dev);
  return buf;
}

}  // namespace ladderkit
