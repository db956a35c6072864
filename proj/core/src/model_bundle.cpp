#include "ladderkit/model_bundle.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ladderkit/errors.hpp"

namespace ladderkit {

namespace fs = std::filesystem;
using json = nlohmann::json;

bool is_supported_resolution(int luma_lines) {
  return std::find(kSupportedResolutions.begin(), kSupportedResolutions.end(),
                   luma_lines) != kSupportedResolutions.end();
}

int width_for_height(int luma_lines) {
  return luma_lines * 16 / 9;
}

std::string supported_resolutions_string() {
  std::string s = "{";
  for (size_t i = 0; i < kSupportedResolutions.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(kSupportedResolutions[i]);
  }
  return s + "}";
}

namespace {

void check_inputs(const ModelBundle& bundle, int resolution,
                  double bitrate_mbps) {
  if (!bundle.loaded()) throw ModelError("model bundle not loaded");
  if (!is_supported_resolution(resolution)) {
    throw ConfigError("unsupported resolution " + std::to_string(resolution) +
                      "; expected one of " + supported_resolutions_string());
  }
  if (!(bitrate_mbps > 0.0)) {
    throw ConfigError("target bitrate must be positive");
  }
}

std::array<double, 8> anchor_input(const ModelBundle& bundle,
                                   const SegmentFeatures& f, int resolution) {
  const auto a = f.as_array();
  return {a[0], a[1], a[2], a[3],
          a[4], a[5], a[6], bundle.normalize_resolution(resolution)};
}

double eval(const TreeEnsemble& model, const CompiledEnsemble& fast,
            std::span<const double> x) {
  return fast.ready() ? fast.predict(x) : model.predict(x);
}

}  // namespace

void ModelBundle::seal() {
  xpsnr_fast = CompiledEnsemble(xpsnr_model);
  bitrate_at_qmin_fast = CompiledEnsemble(bitrate_at_qmin);
  bitrate_at_qmax_fast = CompiledEnsemble(bitrate_at_qmax);
  enctime_at_qmin_fast = CompiledEnsemble(enctime_at_qmin);
  enctime_at_qmax_fast = CompiledEnsemble(enctime_at_qmax);
  dectime_at_qmin_fast = CompiledEnsemble(dectime_at_qmin);
  dectime_at_qmax_fast = CompiledEnsemble(dectime_at_qmax);
}

double qp_line(double v_at_qmin, double v_at_qmax, double q, double q_min,
               double q_max) {
  return v_at_qmin + (q - q_min) * (v_at_qmax - v_at_qmin) / (q_max - q_min);
}

double predict_xpsnr(const ModelBundle& bundle, const SegmentFeatures& f,
                     int resolution, double bitrate_mbps) {
  check_inputs(bundle, resolution, bitrate_mbps);
  const auto a = f.as_array();
  const std::array<double, 9> x = {
      a[0], a[1], a[2], a[3], a[4], a[5], a[6],
      bundle.normalize_resolution(resolution), bitrate_mbps};
  return eval(bundle.xpsnr_model, bundle.xpsnr_fast, x);
}

QpSolution solve_qp(const ModelBundle& bundle, const SegmentFeatures& f,
                    int resolution, double bitrate_mbps) {
  check_inputs(bundle, resolution, bitrate_mbps);
  const auto x = anchor_input(bundle, f, resolution);

  QpSolution sol;
  sol.log2_bitrate_at_qmin =
      eval(bundle.bitrate_at_qmin, bundle.bitrate_at_qmin_fast, x);
  sol.log2_bitrate_at_qmax =
      eval(bundle.bitrate_at_qmax, bundle.bitrate_at_qmax_fast, x);

  // Independent anchor ensembles can cross on out-of-distribution
  // inputs; clamp so the interpolation stays solvable.
  double log2_max = sol.log2_bitrate_at_qmin;
  const double log2_min = sol.log2_bitrate_at_qmax;
  if (log2_max < log2_min) {
    log2_max = log2_min;
    sol.anchors_clamped = true;
  }

  const double log2_target = std::log2(bitrate_mbps);
  const double q_min = bundle.q_min;
  const double q_max = bundle.q_max;
  double q;
  if (log2_max == log2_min) {
    q = log2_target >= log2_max ? q_min : q_max;
  } else {
    q = q_min + (q_max - q_min) * (log2_max - log2_target) /
                    (log2_max - log2_min);
  }
  sol.qp_real = std::clamp(q, q_min, q_max);
  sol.qp = static_cast<int>(std::lround(sol.qp_real));
  return sol;
}

int predict_qp(const ModelBundle& bundle, const SegmentFeatures& f,
               int resolution, double bitrate_mbps) {
  return solve_qp(bundle, f, resolution, bitrate_mbps).qp;
}

namespace {

double time_at_qp(const ModelBundle& bundle, const TreeEnsemble& at_qmin,
                  const CompiledEnsemble& fast_qmin,
                  const TreeEnsemble& at_qmax,
                  const CompiledEnsemble& fast_qmax, const SegmentFeatures& f,
                  int resolution, double qp_real) {
  const auto x = anchor_input(bundle, f, resolution);
  const double log2_time =
      qp_line(eval(at_qmin, fast_qmin, x), eval(at_qmax, fast_qmax, x),
              qp_real, bundle.q_min, bundle.q_max);
  return std::exp2(log2_time);
}

}  // namespace

double predict_enc_time(const ModelBundle& bundle, const SegmentFeatures& f,
                        int resolution, double bitrate_mbps) {
  const QpSolution sol = solve_qp(bundle, f, resolution, bitrate_mbps);
  return predict_enc_time(bundle, f, resolution, sol);
}

double predict_dec_time(const ModelBundle& bundle, const SegmentFeatures& f,
                        int resolution, double bitrate_mbps) {
  const QpSolution sol = solve_qp(bundle, f, resolution, bitrate_mbps);
  return predict_dec_time(bundle, f, resolution, sol);
}

double predict_enc_time(const ModelBundle& bundle, const SegmentFeatures& f,
                        int resolution, const QpSolution& sol) {
  return time_at_qp(bundle, bundle.enctime_at_qmin, bundle.enctime_at_qmin_fast,
                    bundle.enctime_at_qmax, bundle.enctime_at_qmax_fast, f,
                    resolution, sol.qp_real);
}

double predict_dec_time(const ModelBundle& bundle, const SegmentFeatures& f,
                        int resolution, const QpSolution& sol) {
  return time_at_qp(bundle, bundle.dectime_at_qmin, bundle.dectime_at_qmin_fast,
                    bundle.dectime_at_qmax, bundle.dectime_at_qmax_fast, f,
                    resolution, sol.qp_real);
}

namespace {

struct RoleFile {
  const char* name;
  TreeEnsemble ModelBundle::*member;
  size_t feature_count;  // 9 for the XPSNR model, 8 for anchors
};

constexpr size_t kAnchorInputs = 8;   // 7 features + normalized resolution
constexpr size_t kXpsnrInputs = 9;    // anchors + bitrate

const std::array<RoleFile, 7>& role_files() {
  static const std::array<RoleFile, 7> roles = {{
      {"xpsnr.json", &ModelBundle::xpsnr_model, kXpsnrInputs},
      {"bitrate_qmin.json", &ModelBundle::bitrate_at_qmin, kAnchorInputs},
      {"bitrate_qmax.json", &ModelBundle::bitrate_at_qmax, kAnchorInputs},
      {"enctime_qmin.json", &ModelBundle::enctime_at_qmin, kAnchorInputs},
      {"enctime_qmax.json", &ModelBundle::enctime_at_qmax, kAnchorInputs},
      {"dectime_qmin.json", &ModelBundle::dectime_at_qmin, kAnchorInputs},
      {"dectime_qmax.json", &ModelBundle::dectime_at_qmax, kAnchorInputs},
  }};
  return roles;
}

}  // namespace

void save_bundle(const ModelBundle& bundle, const std::string& dir,
                 std::optional<uint64_t> split_seed) {
  if (!bundle.loaded()) throw ModelError("refusing to save an empty bundle");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir + ": cannot create bundle directory");

  for (const RoleFile& role : role_files()) {
    save_model(bundle.*role.member, (fs::path(dir) / role.name).string());
  }
  json manifest;
  manifest["schema"] = "1";
  manifest["q_min"] = bundle.q_min;
  manifest["q_max"] = bundle.q_max;
  manifest["r_norm_base"] = bundle.r_norm_base;
  if (split_seed) manifest["split_seed"] = *split_seed;

  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw IoError(manifest_path + ": cannot open for writing");
  out << manifest.dump() << "\n";
  out.flush();
  if (!out) throw IoError(manifest_path + ": write failed");
}

ModelBundle load_bundle(const std::string& dir) {
  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  std::ifstream in(manifest_path);
  if (!in) throw IoError(manifest_path + ": cannot open file");
  json manifest;
  try {
    in >> manifest;
  } catch (const json::parse_error& e) {
    throw ModelError(manifest_path + ": parse error at byte " +
                     std::to_string(e.byte) + ": " + e.what());
  }

  ModelBundle bundle;
  try {
    const std::string schema = manifest.at("schema").get<std::string>();
    if (schema != "1") {
      throw ModelError(manifest_path + ": unsupported bundle schema '" +
                       schema + "' (expected \"1\")");
    }
    bundle.q_min = manifest.at("q_min").get<int>();
    bundle.q_max = manifest.at("q_max").get<int>();
    bundle.r_norm_base = manifest.at("r_norm_base").get<double>();
  } catch (const json::exception& e) {
    throw ModelError(manifest_path + ": malformed manifest: " + e.what());
  }
  if (bundle.q_min >= bundle.q_max || bundle.r_norm_base <= 0.0) {
    throw ModelError(manifest_path + ": q_min must be < q_max and "
                     "r_norm_base positive");
  }

  for (const RoleFile& role : role_files()) {
    TreeEnsemble model = load_model((fs::path(dir) / role.name).string());
    if (model.feature_count != role.feature_count) {
      throw ModelError(std::string(role.name) + ": expected " +
                       std::to_string(role.feature_count) +
                       " input features, got " +
                       std::to_string(model.feature_count));
    }
    bundle.*role.member = std::move(model);
  }
  bundle.seal();
  return bundle;
}

}  // namespace ladderkit
