#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fieldcalib::cli {

// Exit statuses shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitMalformed = 2;
inline constexpr int kExitTotalFailure = 3;

struct CalibrateOptions {
  std::string annotations;
  std::string config;
  std::string out_dir;
  std::string mode = "argmin";
  std::optional<double> tau;
  bool distortion = false;
  std::uint64_t seed = 0;
  bool trace = false;
  int jobs = 1;
};

struct DecomposeOptions {
  std::string homography;  // file or directory
  std::string out;         // camera file, or directory for directory input
  std::string dims = "960x540";
  double zeta = 100.0;
  bool no_refine = false;
};

struct EvaluateOptions {
  std::string predictions;
  std::string annotations;
  std::string out_dir;  // defaults to the prediction directory
  std::vector<double> thresholds{5.0, 10.0, 20.0};
  std::optional<double> tau;
  std::string iou_dir;
  std::string dims;  // defaults to the dimensions stored with the cameras
};

struct SynthOptions {
  std::string out_dir;
  int count = 10;
  std::uint64_t seed = 0;
  double noise = 0.0;
  std::string hypothesis = "center";
  std::string preset = "main_tribune";
  std::string config;
  std::string dims = "960x540";
  std::optional<double> tilt_min;  // degrees
  std::optional<double> tilt_max;
  double k1 = 0.0;
  double k2 = 0.0;
  int min_segments = 1;
  int jobs = 1;
};

struct ReportOptions {
  std::string run_dir;
  std::optional<double> tau;
};

struct OverlayOptions {
  std::string camera;
  std::string annotations;
  std::string out;
  std::string image_id;
  std::string dims;
};

int cmd_calibrate(const CalibrateOptions& options);
int cmd_decompose(const DecomposeOptions& options);
int cmd_evaluate(const EvaluateOptions& options);
int cmd_synth(const SynthOptions& options);
int cmd_report(const ReportOptions& options);
int cmd_overlay(const OverlayOptions& options);

// Worker count from FIELDCALIB_JOBS, or 1. Throws on a malformed value.
int default_jobs();

// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

}  // namespace fieldcalib::cli
