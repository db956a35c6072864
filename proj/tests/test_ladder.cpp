#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ladderkit/errors.hpp"
#include "ladderkit/ladder.hpp"
#include "test_util.hpp"

using namespace ladderkit;

namespace {

const SegmentFeatures kAnyFeatures{20.0, 5.0, 128.0, 6.0, 6.0, 120.0, 118.0};

// Ensemble whose output depends only on the normalized-resolution input
// (slot 7): one training row per resolution, fit exactly.
TreeEnsemble table_ensemble(size_t feature_count,
                            const std::map<int, double>& value_by_res) {
  TrainMatrix m;
  std::vector<double> row(feature_count, 0.0);
  const auto a = kAnyFeatures.as_array();
  for (const auto& [res, value] : value_by_res) {
    for (int i = 0; i < 7; ++i) row[i] = a[i];
    row[7] = res / 2160.0;
    if (feature_count > 8) row[8] = 1.0;  // bitrate slot, never split on
    m.push_row(row, value);
  }
  return fit(m, {.max_depth = 10, .n_trees = 4, .learning_rate = 1.0,
                 .min_samples_leaf = 1});
}

// Bundle with per-resolution XPSNR and times (flat in QP) and fixed
// 10 Mbps / 0.1 Mbps bitrate anchors.
ModelBundle table_bundle(const std::map<int, double>& xpsnr,
                         const std::map<int, double>& enc_s,
                         const std::map<int, double>& dec_s) {
  std::map<int, double> log2_enc, log2_dec;
  for (const auto& [r, v] : enc_s) log2_enc[r] = std::log2(v);
  for (const auto& [r, v] : dec_s) log2_dec[r] = std::log2(v);

  ModelBundle b;
  b.xpsnr_model = table_ensemble(9, xpsnr);
  b.bitrate_at_qmin = table_ensemble(8, {{1080, std::log2(10.0)}});
  b.bitrate_at_qmax = table_ensemble(8, {{1080, std::log2(0.1)}});
  b.enctime_at_qmin = table_ensemble(8, log2_enc);
  b.enctime_at_qmax = table_ensemble(8, log2_enc);
  b.dectime_at_qmin = table_ensemble(8, log2_dec);
  b.dectime_at_qmax = table_ensemble(8, log2_dec);
  return b;
}

std::map<int, double> per_resolution(std::mt19937_64& rng, double lo,
                                     double hi) {
  std::map<int, double> m;
  for (int r : kSupportedResolutions) m[r] = testutil::uniform(rng, lo, hi);
  return m;
}

Representation rung(double bitrate, double xpsnr) {
  Representation rep;
  rep.target_bitrate_mbps = bitrate;
  rep.resolution = 1080;
  rep.qp = 30;
  rep.predicted_xpsnr_db = xpsnr;
  rep.status = RungStatus::kSelected;
  return rep;
}

std::vector<Representation> rungs_of(const std::vector<double>& xpsnrs) {
  std::vector<Representation> out;
  double bitrate = 1.0;
  for (double x : xpsnrs) {
    out.push_back(rung(bitrate, x));
    bitrate += 1.0;
  }
  return out;
}

// Exhaustive reference for select_best_resolution, written against the
// published decision rule rather than the implementation.
struct ArgmaxResult {
  bool selected = false;
  int resolution = 0;
};

ArgmaxResult argmax_reference(const ModelBundle& bundle,
                              const SegmentFeatures& f, double bitrate,
                              const LadderConfig& cfg) {
  ArgmaxResult result;
  double best_xpsnr = 0.0;
  for (int r : cfg.resolutions) {
    if (r > cfg.max_resolution) continue;
    const double x = predict_xpsnr(bundle, f, r, bitrate);
    const double e = predict_enc_time(bundle, f, r, bitrate);
    const double d = predict_dec_time(bundle, f, r, bitrate);
    if (e > cfg.max_enc_time_s || d > cfg.max_dec_time_s) continue;
    if (!result.selected || x > best_xpsnr) {
      result.selected = true;
      result.resolution = r;
      best_xpsnr = x;
    }
  }
  if (!result.selected && cfg.fallback == FallbackPolicy::kLowestResolution) {
    for (int r : cfg.resolutions) {
      if (r <= cfg.max_resolution) {
        result.selected = true;
        result.resolution = r;
        break;
      }
    }
  }
  return result;
}

}  // namespace

TEST_CASE("resolution selection maximizes XPSNR within the budgets") {
  std::mt19937_64 rng(101);
  const int supported[] = {360, 432, 540, 720, 1080, 1440, 2160};

  int dropped_seen = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const ModelBundle bundle =
        table_bundle(per_resolution(rng, 25.0, 45.0),
                     per_resolution(rng, 5.0, 500.0),
                     per_resolution(rng, 0.5, 30.0));
    LadderConfig cfg;
    cfg.max_resolution = supported[testutil::uniform_int(rng, 0, 6)];
    cfg.max_enc_time_s = trial % 5 == 0 ? kInfiniteTime
                                        : testutil::uniform(rng, 3.0, 600.0);
    cfg.max_dec_time_s = trial % 7 == 0 ? kInfiniteTime
                                        : testutil::uniform(rng, 0.3, 40.0);
    cfg.fallback = trial % 3 == 0 ? FallbackPolicy::kLowestResolution
                                  : FallbackPolicy::kDrop;
    const double bitrate = testutil::uniform(rng, 0.1, 17.0);

    const ResolutionChoice choice =
        select_best_resolution(bundle, kAnyFeatures, bitrate, cfg);
    const ArgmaxResult expected =
        argmax_reference(bundle, kAnyFeatures, bitrate, cfg);

    REQUIRE(choice.selected == expected.selected);
    if (expected.selected) {
      REQUIRE(choice.resolution == expected.resolution);
    } else {
      ++dropped_seen;
    }
    // Diagnostics cover exactly the resolutions under rmax.
    for (const ResolutionCandidate& cand : choice.candidates) {
      CHECK(cand.resolution <= cfg.max_resolution);
    }
  }
  CHECK(dropped_seen > 0);  // the trial mix must exercise the drop path
}

TEST_CASE("ties break toward the lower resolution") {
  std::map<int, double> flat_xpsnr, enc, dec;
  for (int r : kSupportedResolutions) {
    flat_xpsnr[r] = 38.0;
    enc[r] = 10.0;
    dec[r] = 1.0;
  }
  const ModelBundle bundle = table_bundle(flat_xpsnr, enc, dec);
  const LadderConfig cfg;
  const ResolutionChoice choice =
      select_best_resolution(bundle, kAnyFeatures, 1.0, cfg);
  CHECK(choice.selected);
  CHECK(choice.resolution == 360);
}

TEST_CASE("time budget below every resolution drops or falls back") {
  std::map<int, double> xpsnr, enc, dec;
  for (int r : kSupportedResolutions) {
    xpsnr[r] = 30.0 + r / 100.0;
    enc[r] = 50.0 + r;  // cheapest is 410 s
    dec[r] = 1.0;
  }
  const ModelBundle bundle = table_bundle(xpsnr, enc, dec);

  LadderConfig cfg;
  cfg.max_enc_time_s = 100.0;
  const ResolutionChoice dropped =
      select_best_resolution(bundle, kAnyFeatures, 1.0, cfg);
  CHECK(!dropped.selected);
  CHECK(dropped.resolution == 2160);  // unconstrained best, for the record

  cfg.fallback = FallbackPolicy::kLowestResolution;
  const ResolutionChoice fallback =
      select_best_resolution(bundle, kAnyFeatures, 1.0, cfg);
  CHECK(fallback.selected);
  CHECK(fallback.resolution == 360);
}

TEST_CASE("only 360p fits a tight encode budget") {
  std::map<int, double> xpsnr, enc, dec;
  for (int r : kSupportedResolutions) {
    xpsnr[r] = 30.0 + r / 100.0;  // strictly increasing in r
    enc[r] = r == 360 ? 8.0 : 300.0 + r;
    dec[r] = 1.0;
  }
  const ModelBundle bundle = table_bundle(xpsnr, enc, dec);
  LadderConfig cfg;
  cfg.max_enc_time_s = 10.0;
  const ResolutionChoice choice =
      select_best_resolution(bundle, kAnyFeatures, 1.0, cfg);
  CHECK(choice.selected);
  CHECK(choice.resolution == 360);
}

TEST_CASE("jnd gap-2 pruning hand trace") {
  auto rungs = rungs_of({30.0, 32.0, 33.5, 36.0});
  const auto kept = jnd_elimination(rungs, 2.0, 100.0);

  REQUIRE(kept.size() == 3);
  CHECK(kept[0].predicted_xpsnr_db == 30.0);
  CHECK(kept[1].predicted_xpsnr_db == 32.0);
  CHECK(kept[2].predicted_xpsnr_db == 36.0);
  CHECK(rungs[2].status == RungStatus::kDroppedJnd);
  CHECK(rungs[3].status == RungStatus::kSelected);
}

TEST_CASE("jnd max-quality early return hand trace") {
  auto rungs = rungs_of({30.0, 32.0, 36.0, 38.0});
  const auto kept = jnd_elimination(rungs, 2.0, 35.0);

  REQUIRE(kept.size() == 3);
  CHECK(kept[2].predicted_xpsnr_db == 36.0);  // the crossing rung stays
  CHECK(rungs[3].status == RungStatus::kDroppedLossless);
}

TEST_CASE("jnd of zero keeps everything") {
  auto rungs = rungs_of({30.0, 30.5, 31.0, 45.0});
  const auto kept = jnd_elimination(rungs, 0.0, 35.0);
  CHECK(kept.size() == 4);
  for (const Representation& rep : rungs) {
    CHECK(rep.status == RungStatus::kSelected);
  }
}

TEST_CASE("jnd pruning properties on random ascending ladders") {
  std::mt19937_64 rng(211);
  for (int trial = 0; trial < 500; ++trial) {
    const size_t n = static_cast<size_t>(testutil::uniform_int(rng, 1, 12));
    std::vector<double> xpsnrs(n);
    double x = testutil::uniform(rng, 25.0, 32.0);
    for (size_t i = 0; i < n; ++i) {
      xpsnrs[i] = x;
      x += testutil::uniform(rng, 0.0, 3.0);
    }
    const double jnd = testutil::uniform(rng, 0.1, 4.0);
    const double max_q = testutil::uniform(rng, 28.0, 45.0);

    auto rungs = rungs_of(xpsnrs);
    const auto kept = jnd_elimination(rungs, jnd, max_q);

    REQUIRE(!kept.empty());
    CHECK(kept.front().predicted_xpsnr_db == xpsnrs[0]);  // first always kept
    int above_lossless = 0;
    for (size_t i = 1; i < kept.size(); ++i) {
      CHECK(kept[i].predicted_xpsnr_db - kept[i - 1].predicted_xpsnr_db >=
            jnd);
    }
    for (size_t i = 0; i < kept.size(); ++i) {
      if (kept[i].predicted_xpsnr_db > max_q) {
        ++above_lossless;
        CHECK(i == kept.size() - 1);  // only the final keep may cross
      }
    }
    CHECK(above_lossless <= 1);

    // Kept rungs form a subsequence of the input.
    size_t pos = 0;
    for (const Representation& k : kept) {
      while (pos < n && rungs[pos].target_bitrate_mbps !=
                            k.target_bitrate_mbps) {
        ++pos;
      }
      REQUIRE(pos < n);
      ++pos;
    }

    // Statuses in place: everything after a lossless crossing is
    // dropped_lossless, gap failures are dropped_jnd.
    bool crossed = false;
    double last_kept = -1.0;
    for (const Representation& rep : rungs) {
      if (crossed) {
        CHECK(rep.status == RungStatus::kDroppedLossless);
        continue;
      }
      if (rep.status == RungStatus::kSelected) {
        if (rep.predicted_xpsnr_db > max_q) crossed = true;
        last_kept = rep.predicted_xpsnr_db;
      } else {
        CHECK(rep.status == RungStatus::kDroppedJnd);
        CHECK(rep.predicted_xpsnr_db - last_kept < jnd);
      }
    }
  }
}

TEST_CASE("unconstrained ladder keeps all twelve default rungs") {
  std::map<int, double> xpsnr, enc, dec;
  for (int r : kSupportedResolutions) {
    xpsnr[r] = 30.0 + r / 200.0;
    enc[r] = 20.0 + r / 10.0;
    dec[r] = 1.0 + r / 1000.0;
  }
  const ModelBundle bundle = table_bundle(xpsnr, enc, dec);
  const LadderConfig cfg;  // defaults: no budgets, jnd 0
  const BitrateLadder ladder =
      build_ladder(bundle, kAnyFeatures, cfg, "seg0");

  CHECK(ladder.segment_id == "seg0");
  REQUIRE(ladder.rungs.size() == 12);
  for (size_t i = 0; i < ladder.rungs.size(); ++i) {
    const Representation& rep = ladder.rungs[i];
    CHECK(rep.status == RungStatus::kSelected);
    CHECK(rep.qp >= 10);
    CHECK(rep.qp <= 50);
    CHECK(rep.resolution == 2160);  // xpsnr table increases with r
    if (i > 0) {
      CHECK(rep.target_bitrate_mbps >
            ladder.rungs[i - 1].target_bitrate_mbps);
    }
  }
}

TEST_CASE("selected rungs always respect the budgets") {
  std::mt19937_64 rng(307);
  for (int trial = 0; trial < 60; ++trial) {
    const ModelBundle bundle =
        table_bundle(per_resolution(rng, 25.0, 45.0),
                     per_resolution(rng, 5.0, 500.0),
                     per_resolution(rng, 0.5, 30.0));
    LadderConfig cfg;
    cfg.max_enc_time_s = testutil::uniform(rng, 10.0, 600.0);
    cfg.max_dec_time_s = testutil::uniform(rng, 1.0, 40.0);
    cfg.jnd_db = trial % 2 ? 0.0 : testutil::uniform(rng, 0.0, 3.0);
    const BitrateLadder ladder =
        build_ladder(bundle, kAnyFeatures, cfg, "t");
    for (const Representation& rep : ladder.rungs) {
      if (rep.status != RungStatus::kSelected) continue;
      CHECK(rep.predicted_enc_time_s <= cfg.max_enc_time_s);
      CHECK(rep.predicted_dec_time_s <= cfg.max_dec_time_s);
      CHECK(rep.resolution <= cfg.max_resolution);
    }
  }
}

TEST_CASE("tightening the encode budget never raises resolutions") {
  std::map<int, double> xpsnr, enc, dec;
  const std::map<int, double> enc_times = {
      {360, 8.0},  {432, 15.0},  {540, 25.0},  {720, 50.0},
      {1080, 120.0}, {1440, 300.0}, {2160, 900.0}};
  for (int r : kSupportedResolutions) {
    xpsnr[r] = 30.0 + r / 150.0;
    dec[r] = 1.0;
  }
  const ModelBundle bundle = table_bundle(xpsnr, enc_times, dec);

  const double taus[] = {kInfiniteTime, 800.0, 400.0, 200.0, 100.0};
  std::vector<int> prev_res;
  std::vector<bool> prev_dropped;
  for (double tau : taus) {
    LadderConfig cfg;
    cfg.max_enc_time_s = tau;
    const BitrateLadder ladder =
        build_ladder(bundle, kAnyFeatures, cfg, "m");
    std::vector<int> res;
    std::vector<bool> dropped;
    for (const Representation& rep : ladder.rungs) {
      res.push_back(rep.resolution);
      dropped.push_back(rep.status != RungStatus::kSelected);
    }
    if (!prev_res.empty()) {
      for (size_t i = 0; i < res.size(); ++i) {
        if (!dropped[i] && !prev_dropped[i]) {
          CHECK(res[i] <= prev_res[i]);
        }
        if (prev_dropped[i]) CHECK(dropped[i]);  // drops only grow
      }
    }
    prev_res = res;
    prev_dropped = dropped;
  }
}

TEST_CASE("results CSV covers every rung with its status") {
  testutil::TempDir dir("ladder");
  std::map<int, double> xpsnr, enc, dec;
  for (int r : kSupportedResolutions) {
    xpsnr[r] = 31.0 + r / 100.0;
    enc[r] = r / 4.0;
    dec[r] = 1.0;
  }
  const ModelBundle bundle = table_bundle(xpsnr, enc, dec);
  LadderConfig cfg;
  cfg.max_enc_time_s = 200.0;  // cuts 1080 and up (enc = r / 4)
  const BitrateLadder ladder =
      build_ladder(bundle, kAnyFeatures, cfg, "csvseg");

  const std::string path = dir.file("results.csv");
  emit_results_csv(ladder, path);
  const std::string text = testutil::read_file(path);

  CHECK(text.find(kResultsCsvHeader) == 0);
  size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 1 + ladder.rungs.size());
  CHECK(text.find("selected") != std::string::npos);

  // Empty ladders still get a header.
  const BitrateLadder empty{"e", {}};
  emit_results_csv(empty, dir.file("empty.csv"));
  CHECK(testutil::read_file(dir.file("empty.csv")) ==
        std::string(kResultsCsvHeader) + "\n");
}

TEST_CASE("encoder command emission") {
  BitrateLadder ladder;
  ladder.segment_id = "seg7";
  Representation rep = rung(1.6, 40.0);
  rep.resolution = 1080;
  rep.qp = 33;
  ladder.rungs.push_back(rep);
  Representation droppedrep = rung(2.4, 41.0);
  droppedrep.status = RungStatus::kDroppedTimeBudget;
  ladder.rungs.push_back(droppedrep);

  LadderConfig cfg;
  const auto commands = emit_encoder_commands(ladder, cfg);
  REQUIRE(commands.size() == 1);  // dropped rungs emit nothing
  CHECK(commands[0].find("--qp 33") != std::string::npos);
  CHECK(commands[0].find("--MaxBitrate 1600000") != std::string::npos);
  CHECK(commands[0].find("1920x1080") != std::string::npos);
  CHECK(commands[0].find("preset faster") != std::string::npos);
  CHECK(commands[0].find("seg7.y4m") != std::string::npos);

  cfg.codec = "h264";
  CHECK_THROWS_WITH_AS(emit_encoder_commands(ladder, cfg),
                       doctest::Contains("no template for codec"),
                       ConfigError);
}

TEST_CASE("config validation rejects malformed ladders") {
  LadderConfig cfg;

  cfg.resolutions = {360, 720, 540};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = LadderConfig{};
  cfg.resolutions = {360, 700};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = LadderConfig{};
  cfg.max_resolution = 999;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("rmax"),
                       ConfigError);

  cfg = LadderConfig{};
  cfg.bitrates_mbps = {1.0, 1.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = LadderConfig{};
  cfg.jnd_db = -0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = LadderConfig{};
  cfg.max_enc_time_s = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  // rmax 720 restricts the ladder without being an error.
  cfg = LadderConfig{};
  cfg.max_resolution = 720;
  cfg.validate();
}
