// Command-line front end: analyze media into complexity features, train
// prediction models, build bitrate ladders, and export plot data.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ladderkit/complexity.hpp"
#include "ladderkit/errors.hpp"
#include "ladderkit/frames.hpp"
#include "ladderkit/ladder.hpp"
#include "ladderkit/model_bundle.hpp"
#include "ladderkit/training.hpp"

namespace {

using namespace ladderkit;

std::string lower_ext(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// "9999", anything above it, and the literal "inf" all mean unbounded.
double parse_time_budget(const std::string& text, const char* flag) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (t == "inf" || t == "infinity") return kInfiniteTime;
  double v = 0.0;
  try {
    size_t pos = 0;
    v = std::stod(t, &pos);
    if (pos != t.size()) throw std::invalid_argument(t);
  } catch (const std::exception&) {
    throw ConfigError(std::string(flag) + ": expected seconds or \"inf\", got '" +
                      text + "'");
  }
  if (v <= 0.0) {
    throw ConfigError(std::string(flag) + " must be positive (got " + text + ")");
  }
  return v >= 9999.0 ? kInfiniteTime : v;
}

RawDims parse_raw_dims(const std::string& text, int bit_depth) {
  RawDims dims;
  dims.bit_depth = bit_depth;
  if (std::sscanf(text.c_str(), "%dx%d", &dims.width, &dims.height) != 2) {
    throw ConfigError("--raw-dims expects WIDTHxHEIGHT, got '" + text + "'");
  }
  return dims;
}

FrameSequence load_media(const std::string& path,
                         const std::string& raw_dims_text, int bit_depth) {
  const std::string ext = lower_ext(path);
  if (ext == ".y4m") {
    return load_segment(path, MediaFormat::kY4m);
  }
  if (ext == ".yuv" || ext == ".raw") {
    if (raw_dims_text.empty()) {
      throw ConfigError("raw input requires --raw-dims WIDTHxHEIGHT");
    }
    return load_segment(path, MediaFormat::kRaw,
                        parse_raw_dims(raw_dims_text, bit_depth));
  }
  throw ConfigError("cannot tell media type from extension '" + ext +
                    "' (expected .y4m, .yuv or .raw)");
}

std::string default_segment_id(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

struct AnalyzeArgs {
  std::string input;
  std::string output = "features.csv";
  std::string segment_id;
  std::string raw_dims;
  int bit_depth = 8;
};

int run_analyze(const AnalyzeArgs& args) {
  const FrameSequence frames =
      load_media(args.input, args.raw_dims, args.bit_depth);
  const SegmentFeatures f = analyze_segment(frames);
  const std::string id =
      args.segment_id.empty() ? default_segment_id(args.input) : args.segment_id;
  features_to_csv(f, id, args.output);
  const auto a = f.as_array();
  std::printf("%s: E_Y=%.3f h=%.3f L_Y=%.3f E_U=%.3f E_V=%.3f L_U=%.3f "
              "L_V=%.3f (%d frames)\n",
              id.c_str(), a[0], a[1], a[2], a[3], a[4], a[5], a[6],
              frames.frame_count());
  return 0;
}

struct TrainArgs {
  std::string training_csv;
  std::string bundle_dir;
  GbtParams gbt;
  double holdout = 0.0;
  uint64_t seed = 7;
};

int run_train(const TrainArgs& args) {
  const std::vector<TrainingRecord> records =
      ingest_training_csv(args.training_csv);
  TrainOptions opts;
  opts.gbt = args.gbt;
  if (args.holdout > 0.0) {
    const SegmentSplit split =
        split_by_segment(records, args.holdout, args.seed);
    const ModelBundle bundle = train_bundle(split.train, opts);
    save_bundle(bundle, args.bundle_dir, args.seed);
    const EvalReport report = evaluate_bundle(bundle, split.holdout);
    std::printf("trained on %zu rows, held out %zu\n%s", split.train.size(),
                split.holdout.size(), format_report(report).c_str());
  } else {
    const ModelBundle bundle = train_bundle(records, opts);
    save_bundle(bundle, args.bundle_dir);
    std::printf("trained on %zu rows\n", records.size());
  }
  std::printf("bundle written to %s\n", args.bundle_dir.c_str());
  return 0;
}

struct BuildArgs {
  std::string input;
  std::string bundle_dir;
  std::string max_enc_time = "9999";
  std::string max_dec_time = "9999";
  std::string codec = "vvenc";
  std::string result_csv = "results.csv";
  int rmax = 2160;
  double max_quality = 100.0;
  double jnd = 0.0;
  std::string commands_path;  // "-" for stdout
  std::string fallback = "drop";
  std::string segment_id;
  std::string raw_dims;
  int bit_depth = 8;
};

LadderConfig config_from(const BuildArgs& args) {
  LadderConfig cfg;
  cfg.max_enc_time_s = parse_time_budget(args.max_enc_time, "--maxEncTime");
  cfg.max_dec_time_s = parse_time_budget(args.max_dec_time, "--maxDecTime");
  if (!is_supported_resolution(args.rmax)) {
    throw ConfigError("--rmax " + std::to_string(args.rmax) +
                      " is not in the supported set " +
                      supported_resolutions_string());
  }
  cfg.max_resolution = args.rmax;
  if (args.jnd < 0.0) throw ConfigError("--jnd must be >= 0");
  cfg.jnd_db = args.jnd;
  cfg.max_quality_db = args.max_quality;
  cfg.codec = args.codec;
  cfg.result_csv = args.result_csv;
  if (args.fallback == "drop") {
    cfg.fallback = FallbackPolicy::kDrop;
  } else if (args.fallback == "lowest") {
    cfg.fallback = FallbackPolicy::kLowestResolution;
  } else {
    throw ConfigError("--fallback must be 'drop' or 'lowest'");
  }
  cfg.validate();
  return cfg;
}

int run_build(const BuildArgs& args) {
  const ModelBundle bundle = load_bundle(args.bundle_dir);
  const LadderConfig cfg = config_from(args);

  // The input is either a feature CSV (many segments) or one media file.
  std::vector<std::pair<std::string, SegmentFeatures>> segments;
  std::string media_path;
  if (lower_ext(args.input) == ".csv") {
    segments = read_features_csv(args.input);
    if (segments.empty()) throw IoError(args.input + ": no feature rows");
  } else {
    const FrameSequence frames =
        load_media(args.input, args.raw_dims, args.bit_depth);
    const std::string id = args.segment_id.empty()
                               ? default_segment_id(args.input)
                               : args.segment_id;
    segments.emplace_back(id, analyze_segment(frames));
    media_path = args.input;
  }

  std::string csv(kResultsCsvHeader);
  csv += "\n";
  std::vector<std::string> commands;
  size_t selected = 0, total = 0;
  for (const auto& [id, features] : segments) {
    const BitrateLadder ladder = build_ladder(bundle, features, cfg, id);
    append_results_csv(ladder, csv);
    total += ladder.rungs.size();
    for (const Representation& rep : ladder.rungs) {
      if (rep.status == RungStatus::kSelected) ++selected;
    }
    if (!args.commands_path.empty()) {
      const auto cmds = emit_encoder_commands(ladder, cfg, media_path);
      commands.insert(commands.end(), cmds.begin(), cmds.end());
    }
  }

  std::ofstream out(cfg.result_csv, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(cfg.result_csv + ": cannot open for writing");
  out << csv;
  out.flush();
  if (!out) throw IoError(cfg.result_csv + ": write failed");

  if (!args.commands_path.empty()) {
    if (args.commands_path == "-") {
      for (const std::string& cmd : commands) std::printf("%s\n", cmd.c_str());
    } else {
      std::ofstream script(args.commands_path,
                           std::ios::binary | std::ios::trunc);
      if (!script) {
        throw IoError(args.commands_path + ": cannot open for writing");
      }
      script << "#!/bin/sh\n";
      for (const std::string& cmd : commands) script << cmd << "\n";
      script.flush();
      if (!script) throw IoError(args.commands_path + ": write failed");
    }
  }

  std::printf("%s: %zu rung(s), %zu selected, %zu segment(s)\n",
              cfg.result_csv.c_str(), total, selected, segments.size());
  return 0;
}

struct ExportArgs {
  std::string features_csv;
  std::string bundle_dir;
  std::string out_dir = ".";
};

// Per-segment rate-quality and rate-encoding-time curves, one row per
// (segment, resolution, bitrate) over the default grids.
int run_export_plot(const ExportArgs& args) {
  const ModelBundle bundle = load_bundle(args.bundle_dir);
  const auto segments = read_features_csv(args.features_csv);
  if (segments.empty()) throw IoError(args.features_csv + ": no feature rows");

  std::filesystem::create_directories(args.out_dir);
  const std::string quality_path =
      (std::filesystem::path(args.out_dir) / "rate_quality.csv").string();
  const std::string time_path =
      (std::filesystem::path(args.out_dir) / "rate_enc_time.csv").string();

  std::ofstream quality(quality_path, std::ios::binary | std::ios::trunc);
  std::ofstream time(time_path, std::ios::binary | std::ios::trunc);
  if (!quality || !time) {
    throw IoError("cannot open plot CSVs in " + args.out_dir);
  }
  quality << "segment_id,resolution,bitrate_mbps,pred_xpsnr\n";
  time << "segment_id,resolution,bitrate_mbps,pred_enc_time_s\n";

  char buf[256];
  for (const auto& [id, f] : segments) {
    for (int r : default_resolutions()) {
      for (double b : default_bitrates_mbps()) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f\n", id.c_str(), r, b,
                      predict_xpsnr(bundle, f, r, b));
        quality << buf;
        std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f\n", id.c_str(), r, b,
                      predict_enc_time(bundle, f, r, b));
        time << buf;
      }
    }
  }
  quality.flush();
  time.flush();
  if (!quality || !time) throw IoError("plot CSV write failed");
  std::printf("wrote %s and %s\n", quality_path.c_str(), time_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-title bitrate ladder construction toolkit"};
  app.require_subcommand(1);

  AnalyzeArgs analyze_args;
  CLI::App* analyze =
      app.add_subcommand("analyze", "Extract complexity features from media");
  analyze->add_option("input", analyze_args.input, "Y4M or raw YUV file")
      ->required();
  analyze->add_option("-o,--output", analyze_args.output,
                      "Feature CSV to append to")
      ->capture_default_str();
  analyze->add_option("--segment-id", analyze_args.segment_id,
                      "Row id (default: input stem)");
  analyze->add_option("--raw-dims", analyze_args.raw_dims,
                      "WIDTHxHEIGHT for raw input");
  analyze->add_option("--bit-depth", analyze_args.bit_depth,
                      "Raw sample depth")
      ->check(CLI::IsMember({8, 10}))
      ->capture_default_str();

  TrainArgs train_args;
  CLI::App* train =
      app.add_subcommand("train", "Train prediction models from encode logs");
  train->add_option("training_csv", train_args.training_csv,
                    "Per-encode training rows")
      ->required();
  train->add_option("bundle_dir", train_args.bundle_dir,
                    "Output model directory")
      ->required();
  train->add_option("--trees", train_args.gbt.n_trees, "Boosting rounds")
      ->capture_default_str();
  train->add_option("--depth", train_args.gbt.max_depth, "Maximum tree depth")
      ->capture_default_str();
  train->add_option("--learning-rate", train_args.gbt.learning_rate,
                    "Shrinkage per tree")
      ->capture_default_str();
  train->add_option("--min-leaf", train_args.gbt.min_samples_leaf,
                    "Minimum samples per leaf")
      ->capture_default_str();
  train->add_option("--holdout", train_args.holdout,
                    "Held-out segment fraction for the MAE report (0 trains "
                    "on everything)")
      ->capture_default_str();
  train->add_option("--seed", train_args.seed, "Split seed")
      ->capture_default_str();

  BuildArgs build_args;
  CLI::App* build =
      app.add_subcommand("build", "Build the bitrate ladder for segments");
  build->add_option("input", build_args.input,
                    "Feature CSV or media file")
      ->required();
  build->add_option("bundle_dir", build_args.bundle_dir,
                    "Trained model directory")
      ->required();
  build->add_option("--maxEncTime", build_args.max_enc_time,
                    "Max encoding seconds per rung, or \"inf\"")
      ->capture_default_str();
  build->add_option("--maxDecTime", build_args.max_dec_time,
                    "Max decoding seconds per rung, or \"inf\"")
      ->capture_default_str();
  build->add_option("--codec", build_args.codec, "Encoder command template")
      ->capture_default_str();
  build->add_option("--resultCsv", build_args.result_csv, "Ladder CSV path")
      ->capture_default_str();
  build->add_option("--rmax", build_args.rmax,
                    "Maximum encoding resolution (luma lines)")
      ->capture_default_str();
  build->add_option("--maxQuality", build_args.max_quality,
                    "Perceptually lossless XPSNR (dB)")
      ->capture_default_str();
  build->add_option("--jnd", build_args.jnd,
                    "Minimum XPSNR gap between rungs (dB, 0 disables)")
      ->capture_default_str();
  build->add_option("--commands", build_args.commands_path,
                    "Write encoder commands to this script (\"-\" = stdout)");
  build->add_option("--fallback", build_args.fallback,
                    "When no resolution fits the budgets: drop | lowest")
      ->capture_default_str();
  build->add_option("--segment-id", build_args.segment_id,
                    "Segment id for media input");
  build->add_option("--raw-dims", build_args.raw_dims,
                    "WIDTHxHEIGHT for raw input");
  build->add_option("--bit-depth", build_args.bit_depth, "Raw sample depth")
      ->check(CLI::IsMember({8, 10}))
      ->capture_default_str();

  ExportArgs export_args;
  CLI::App* export_plot = app.add_subcommand(
      "export-plot", "Export rate-quality / rate-time curves for plotting");
  export_plot->add_option("features_csv", export_args.features_csv,
                          "Feature CSV")
      ->required();
  export_plot->add_option("bundle_dir", export_args.bundle_dir,
                          "Trained model directory")
      ->required();
  export_plot->add_option("-o,--out-dir", export_args.out_dir,
                          "Output directory")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
    if (analyze->parsed()) return run_analyze(analyze_args);
    if (train->parsed()) return run_train(train_args);
    if (build->parsed()) return run_build(build_args);
    if (export_plot->parsed()) return run_export_plot(export_args);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const ModelError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
