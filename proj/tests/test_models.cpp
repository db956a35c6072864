#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include "ladderkit/errors.hpp"
#include "ladderkit/model_bundle.hpp"
#include "test_util.hpp"

using namespace ladderkit;

namespace {

// Ensemble that predicts `value` for every input: constant-target
// training collapses to a base score, which is exact.
TreeEnsemble const_ensemble(size_t feature_count, double value) {
  TrainMatrix m;
  std::vector<double> row(feature_count, 0.0);
  m.push_row(row, value);
  row.assign(feature_count, 1.0);
  m.push_row(row, value);
  return fit(m, {});
}

// Anchors: 10 Mbps at QP 10, 0.1 Mbps at QP 50; times 400 s / 100 s.
ModelBundle reference_bundle() {
  ModelBundle b;
  b.xpsnr_model = const_ensemble(9, 40.0);
  b.bitrate_at_qmin = const_ensemble(8, std::log2(10.0));
  b.bitrate_at_qmax = const_ensemble(8, std::log2(0.1));
  b.enctime_at_qmin = const_ensemble(8, std::log2(400.0));
  b.enctime_at_qmax = const_ensemble(8, std::log2(100.0));
  b.dectime_at_qmin = const_ensemble(8, std::log2(8.0));
  b.dectime_at_qmax = const_ensemble(8, std::log2(2.0));
  return b;
}

const SegmentFeatures kAnyFeatures{20.0, 5.0, 128.0, 6.0, 6.0, 120.0, 118.0};

}  // namespace

TEST_CASE("qp_line endpoints, midpoint, and flat anchors") {
  CHECK(qp_line(3.0, -1.0, 10.0, 10, 50) == 3.0);
  CHECK(qp_line(3.0, -1.0, 50.0, 10, 50) == -1.0);
  CHECK(qp_line(3.0, -1.0, 30.0, 10, 50) == doctest::Approx(1.0));
  CHECK(qp_line(2.5, 2.5, 37.0, 10, 50) == 2.5);
}

TEST_CASE("log-linear interpolation recovers the documented QPs") {
  const ModelBundle b = reference_bundle();

  CHECK(predict_qp(b, kAnyFeatures, 1080, 10.0) == 10);
  CHECK(predict_qp(b, kAnyFeatures, 1080, 1.0) == 30);
  CHECK(predict_qp(b, kAnyFeatures, 1080, 0.1) == 50);
  // Above the q_min anchor bitrate the QP clamps at the low end.
  CHECK(predict_qp(b, kAnyFeatures, 1080, 20.0) == 10);
  // Below the q_max anchor bitrate it clamps at the high end.
  CHECK(predict_qp(b, kAnyFeatures, 1080, 0.01) == 50);
}

TEST_CASE("solve_qp reports anchors and the unrounded QP") {
  const ModelBundle b = reference_bundle();
  const QpSolution s = solve_qp(b, kAnyFeatures, 1080, 1.0);
  CHECK(s.qp_real == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(s.qp == 30);
  CHECK(s.log2_bitrate_at_qmin == doctest::Approx(std::log2(10.0)));
  CHECK(s.log2_bitrate_at_qmax == doctest::Approx(std::log2(0.1)));
  CHECK(!s.anchors_clamped);
}

TEST_CASE("time prediction interpolates in the log domain") {
  const ModelBundle b = reference_bundle();

  // QP 30 lands halfway between the anchors: sqrt(400 * 100) = 200.
  CHECK(predict_enc_time(b, kAnyFeatures, 1080, 1.0) ==
        doctest::Approx(200.0).epsilon(1e-9));
  CHECK(predict_dec_time(b, kAnyFeatures, 1080, 1.0) ==
        doctest::Approx(4.0).epsilon(1e-9));

  // A clamped QP of 10 returns the q_min anchor time.
  CHECK(predict_enc_time(b, kAnyFeatures, 1080, 20.0) ==
        doctest::Approx(400.0).epsilon(1e-12));
  CHECK(predict_enc_time(b, kAnyFeatures, 1080, 0.01) ==
        doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("predicted QP is monotone in the target bitrate") {
  const ModelBundle b = reference_bundle();
  double prev_qp_real = 51.0;
  for (double bt = 0.05; bt < 20.0; bt *= 1.37) {
    const QpSolution s = solve_qp(b, kAnyFeatures, 720, bt);
    CHECK(s.qp_real <= prev_qp_real + 1e-12);
    CHECK(s.qp_real >= 10.0);
    CHECK(s.qp_real <= 50.0);
    prev_qp_real = s.qp_real;
  }
}

TEST_CASE("crossed anchors are clamped, not hidden") {
  ModelBundle b = reference_bundle();
  b.bitrate_at_qmin = const_ensemble(8, std::log2(0.5));
  b.bitrate_at_qmax = const_ensemble(8, std::log2(2.0));

  const QpSolution s = solve_qp(b, kAnyFeatures, 1080, 1.0);
  CHECK(s.anchors_clamped);
  // After the clamp both anchors sit at log2(2): degenerate line, and
  // 1 Mbps is below it, so the QP pins to q_max.
  CHECK(s.qp == 50);

  const QpSolution hi = solve_qp(b, kAnyFeatures, 1080, 2.0);
  CHECK(hi.qp == 10);
}

TEST_CASE("degenerate equal anchors split on the target bitrate") {
  ModelBundle b = reference_bundle();
  b.bitrate_at_qmin = const_ensemble(8, 0.0);  // 1 Mbps at both anchors
  b.bitrate_at_qmax = const_ensemble(8, 0.0);

  CHECK(predict_qp(b, kAnyFeatures, 1080, 1.0) == 10);   // log2 1 >= 0
  CHECK(predict_qp(b, kAnyFeatures, 1080, 4.0) == 10);
  CHECK(predict_qp(b, kAnyFeatures, 1080, 0.5) == 50);
}

TEST_CASE("constant-trained XPSNR model predicts its constant") {
  const ModelBundle b = reference_bundle();
  CHECK(predict_xpsnr(b, kAnyFeatures, 2160, 5.8) == 40.0);
  CHECK(predict_xpsnr(b, kAnyFeatures, 360, 0.145) == 40.0);
}

TEST_CASE("unloaded bundle raises a model error") {
  const ModelBundle empty;
  CHECK(!empty.loaded());
  CHECK_THROWS_AS(predict_xpsnr(empty, kAnyFeatures, 1080, 1.0), ModelError);
  CHECK_THROWS_AS(solve_qp(empty, kAnyFeatures, 1080, 1.0), ModelError);
}

TEST_CASE("resolution helpers") {
  CHECK(is_supported_resolution(1080));
  CHECK(!is_supported_resolution(999));
  CHECK(width_for_height(2160) == 3840);
  CHECK(width_for_height(1440) == 2560);
  CHECK(width_for_height(1080) == 1920);
  CHECK(width_for_height(720) == 1280);
  CHECK(width_for_height(540) == 960);
  CHECK(width_for_height(432) == 768);
  CHECK(width_for_height(360) == 640);
  const std::string all = supported_resolutions_string();
  for (int r : kSupportedResolutions) {
    CHECK(all.find(std::to_string(r)) != std::string::npos);
  }
}

TEST_CASE("bundle save and load round trip") {
  testutil::TempDir dir("bundle");
  const ModelBundle b = reference_bundle();
  save_bundle(b, dir.file("models"));

  for (const char* name :
       {"xpsnr.json", "bitrate_qmin.json", "bitrate_qmax.json",
        "enctime_qmin.json", "enctime_qmax.json", "dectime_qmin.json",
        "dectime_qmax.json", "manifest.json"}) {
    CHECK(std::filesystem::exists(dir.path() / "models" / name));
  }

  const ModelBundle loaded = load_bundle(dir.file("models"));
  CHECK(loaded.q_min == 10);
  CHECK(loaded.q_max == 50);
  CHECK(loaded.r_norm_base == 2160.0);
  CHECK(loaded.xpsnr_model.base_score == b.xpsnr_model.base_score);
  CHECK(predict_enc_time(loaded, kAnyFeatures, 1080, 1.0) ==
        predict_enc_time(b, kAnyFeatures, 1080, 1.0));
}

TEST_CASE("bundle loading rejects broken directories") {
  testutil::TempDir dir("badbundle");
  const ModelBundle b = reference_bundle();
  const std::string path = dir.file("models");
  save_bundle(b, path);

  SUBCASE("missing role file") {
    std::filesystem::remove(dir.path() / "models" / "dectime_qmax.json");
    CHECK_THROWS_AS(load_bundle(path), IoError);
  }
  SUBCASE("feature count mismatch across roles") {
    // The XPSNR model expects 9 inputs; swap in an 8-input anchor file.
    std::filesystem::copy_file(dir.path() / "models" / "bitrate_qmin.json",
                               dir.path() / "models" / "xpsnr.json",
                               std::filesystem::copy_options::overwrite_existing);
    CHECK_THROWS_AS(load_bundle(path), ModelError);
  }
  SUBCASE("manifest schema version") {
    testutil::write_file(
        (dir.path() / "models" / "manifest.json").string(),
        R"({"schema":"9","q_min":10,"q_max":50,"r_norm_base":2160})");
    CHECK_THROWS_AS(load_bundle(path), ModelError);
  }
  SUBCASE("inverted qp range in manifest") {
    testutil::write_file(
        (dir.path() / "models" / "manifest.json").string(),
        R"({"schema":"1","q_min":50,"q_max":10,"r_norm_base":2160})");
    CHECK_THROWS_AS(load_bundle(path), ModelError);
  }
  SUBCASE("missing directory") {
    CHECK_THROWS_AS(load_bundle(dir.file("absent")), IoError);
  }
}

TEST_CASE("normalized resolution stays in (0, 1] for the supported set") {
  const ModelBundle b = reference_bundle();
  for (int r : kSupportedResolutions) {
    const double v = b.normalize_resolution(r);
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}
