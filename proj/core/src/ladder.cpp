#include "ladderkit/ladder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ladderkit/errors.hpp"

namespace ladderkit {

std::vector<int> default_resolutions() {
  return {kSupportedResolutions.begin(), kSupportedResolutions.end()};
}

std::vector<double> default_bitrates_mbps() {
  return {0.145, 0.300, 0.600, 0.900, 1.600,  2.400,
          3.400, 4.500, 5.800, 8.100, 11.600, 16.800};
}

void LadderConfig::validate() const {
  if (resolutions.empty()) {
    throw ConfigError("resolution set must not be empty");
  }
  for (size_t i = 0; i < resolutions.size(); ++i) {
    if (!is_supported_resolution(resolutions[i])) {
      throw ConfigError("unsupported resolution " +
                        std::to_string(resolutions[i]) + "; expected one of " +
                        supported_resolutions_string());
    }
    if (i > 0 && resolutions[i] <= resolutions[i - 1]) {
      throw ConfigError("resolutions must be strictly ascending");
    }
  }
  if (std::find(resolutions.begin(), resolutions.end(), max_resolution) ==
      resolutions.end()) {
    throw ConfigError("rmax " + std::to_string(max_resolution) +
                      " is not in the resolution set");
  }
  for (size_t i = 0; i < bitrates_mbps.size(); ++i) {
    if (!(bitrates_mbps[i] > 0.0)) {
      throw ConfigError("bitrates must be positive");
    }
    if (i > 0 && bitrates_mbps[i] <= bitrates_mbps[i - 1]) {
      throw ConfigError("bitrates must be strictly ascending");
    }
  }
  if (!(max_enc_time_s > 0.0) || !(max_dec_time_s > 0.0)) {
    throw ConfigError("time budgets must be positive");
  }
  if (jnd_db < 0.0) throw ConfigError("jnd must be >= 0");
}

const char* to_string(RungStatus status) {
  switch (status) {
    case RungStatus::kSelected: return "selected";
    case RungStatus::kDroppedTimeBudget: return "dropped_time_budget";
    case RungStatus::kDroppedJnd: return "dropped_jnd";
    case RungStatus::kDroppedLossless: return "dropped_lossless";
  }
  return "unknown";
}

ResolutionChoice select_best_resolution(const ModelBundle& bundle,
                                        const SegmentFeatures& f,
                                        double bitrate_mbps,
                                        const LadderConfig& cfg) {
  // With both budgets unbounded every candidate is feasible, so the time
  // models cannot change the argmax; evaluate them only for the winner.
  const bool unbounded = cfg.max_enc_time_s >= kInfiniteTime &&
                         cfg.max_dec_time_s >= kInfiniteTime;

  ResolutionChoice choice;
  for (int r : cfg.resolutions) {
    if (r > cfg.max_resolution) continue;
    ResolutionCandidate cand;
    cand.resolution = r;
    cand.xpsnr_db = predict_xpsnr(bundle, f, r, bitrate_mbps);
    if (unbounded) {
      cand.feasible = true;
    } else {
      const QpSolution sol = solve_qp(bundle, f, r, bitrate_mbps);
      cand.qp = sol.qp;
      cand.enc_time_s = predict_enc_time(bundle, f, r, sol);
      cand.dec_time_s = predict_dec_time(bundle, f, r, sol);
      cand.feasible = cand.enc_time_s <= cfg.max_enc_time_s &&
                      cand.dec_time_s <= cfg.max_dec_time_s;
    }
    choice.candidates.push_back(cand);
  }
  if (choice.candidates.empty()) {
    throw ConfigError("no resolutions <= rmax " +
                      std::to_string(cfg.max_resolution));
  }

  // Ascending scan with strict > keeps the lower resolution on ties.
  const ResolutionCandidate* best = nullptr;
  for (const ResolutionCandidate& cand : choice.candidates) {
    if (!cand.feasible) continue;
    if (!best || cand.xpsnr_db > best->xpsnr_db) best = &cand;
  }
  if (best) {
    choice.selected = true;
    choice.resolution = best->resolution;
  } else if (cfg.fallback == FallbackPolicy::kLowestResolution) {
    choice.selected = true;
    choice.resolution = choice.candidates.front().resolution;
  } else {
    // Dropped: report the unconstrained best for diagnostics.
    const ResolutionCandidate* any_best = &choice.candidates.front();
    for (const ResolutionCandidate& cand : choice.candidates) {
      if (cand.xpsnr_db > any_best->xpsnr_db) any_best = &cand;
    }
    choice.selected = false;
    choice.resolution = any_best->resolution;
  }

  if (unbounded) {
    for (ResolutionCandidate& cand : choice.candidates) {
      if (cand.resolution != choice.resolution) continue;
      const QpSolution sol = solve_qp(bundle, f, cand.resolution, bitrate_mbps);
      cand.qp = sol.qp;
      cand.enc_time_s = predict_enc_time(bundle, f, cand.resolution, sol);
      cand.dec_time_s = predict_dec_time(bundle, f, cand.resolution, sol);
      break;
    }
  }
  return choice;
}

std::vector<Representation> jnd_elimination(std::span<Representation> rungs,
                                            double jnd_db,
                                            double max_xpsnr_db) {
  std::vector<Representation> kept;
  if (jnd_db == 0.0) {
    kept.assign(rungs.begin(), rungs.end());
    return kept;
  }
  bool done = false;
  for (size_t i = 0; i < rungs.size(); ++i) {
    Representation& rep = rungs[i];
    if (done) {
      rep.status = RungStatus::kDroppedLossless;
      continue;
    }
    if (kept.empty() ||
        rep.predicted_xpsnr_db - kept.back().predicted_xpsnr_db >= jnd_db) {
      kept.push_back(rep);
      // A kept rung beyond the lossless threshold ends the ladder.
      if (rep.predicted_xpsnr_db > max_xpsnr_db) done = true;
    } else {
      rep.status = RungStatus::kDroppedJnd;
    }
  }
  return kept;
}

BitrateLadder build_ladder(const ModelBundle& bundle, const SegmentFeatures& f,
                           const LadderConfig& cfg,
                           const std::string& segment_id) {
  cfg.validate();
  BitrateLadder ladder;
  ladder.segment_id = segment_id;

  for (double bitrate : cfg.bitrates_mbps) {
    const auto t0 = std::chrono::steady_clock::now();
    const ResolutionChoice choice =
        select_best_resolution(bundle, f, bitrate, cfg);
    const auto t1 = std::chrono::steady_clock::now();

    Representation rep;
    rep.target_bitrate_mbps = bitrate;
    rep.resolution = choice.resolution;
    for (const ResolutionCandidate& cand : choice.candidates) {
      if (cand.resolution == choice.resolution) {
        rep.qp = cand.qp;
        rep.predicted_xpsnr_db = cand.xpsnr_db;
        rep.predicted_enc_time_s = cand.enc_time_s;
        rep.predicted_dec_time_s = cand.dec_time_s;
        break;
      }
    }
    rep.status = choice.selected ? RungStatus::kSelected
                                 : RungStatus::kDroppedTimeBudget;
    rep.prediction_time_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    ladder.rungs.push_back(rep);
  }

  // JND pruning runs over the selected rungs only, in ladder order.
  std::vector<Representation> selected;
  for (const Representation& rep : ladder.rungs) {
    if (rep.status == RungStatus::kSelected) selected.push_back(rep);
  }
  jnd_elimination(selected, cfg.jnd_db, cfg.max_quality_db);
  size_t j = 0;
  for (Representation& rep : ladder.rungs) {
    if (rep.status == RungStatus::kSelected) rep.status = selected[j++].status;
  }
  return ladder;
}

void append_results_csv(const BitrateLadder& ladder, std::string& out) {
  char buf[256];
  for (const Representation& rep : ladder.rungs) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%d,%d,%.6f,%.6f,%.6f,%s\n",
                  ladder.segment_id.c_str(), rep.target_bitrate_mbps,
                  rep.resolution, rep.qp, rep.predicted_xpsnr_db,
                  rep.predicted_enc_time_s, rep.predicted_dec_time_s,
                  to_string(rep.status));
    out += buf;
  }
}

void emit_results_csv(const BitrateLadder& ladder, const std::string& path) {
  std::string body(kResultsCsvHeader);
  body += "\n";
  append_results_csv(ladder, body);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << body;
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

std::vector<std::string> emit_encoder_commands(const BitrateLadder& ladder,
                                               const LadderConfig& cfg,
                                               const std::string& input_path) {
  if (cfg.codec != "vvenc") {
    throw ConfigError("no template for codec '" + cfg.codec + "'");
  }
  const std::string input =
      input_path.empty() ? ladder.segment_id + ".y4m" : input_path;
  std::vector<std::string> commands;
  char buf[512];
  for (const Representation& rep : ladder.rungs) {
    if (rep.status != RungStatus::kSelected) continue;
    const long long bps = std::llround(rep.target_bitrate_mbps * 1e6);
    const long long kbps = std::llround(rep.target_bitrate_mbps * 1e3);
    std::snprintf(buf, sizeof(buf),
                  "vvencapp -i %s --size %dx%d --preset faster --qp %d "
                  "--MaxBitrate %lld --output %s_%dp_%lldkbps.266",
                  input.c_str(), width_for_height(rep.resolution),
                  rep.resolution, rep.qp, bps, ladder.segment_id.c_str(),
                  rep.resolution, kbps);
    commands.emplace_back(buf);
  }
  return commands;
}

}  // namespace ladderkit
