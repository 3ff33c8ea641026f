#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fieldcalib/camera.hpp"
#include "fieldcalib/field_model.hpp"
#include "fieldcalib/metrics.hpp"
#include "fieldcalib/optimizer.hpp"
#include "fieldcalib/reprojection_loss.hpp"

namespace fieldcalib {

// Indices of a maximally spread subset of k points, in original order. Starts
// from the mutually farthest pair and greedily adds the point farthest from
// the current selection; ties go to the lower index.
std::vector<std::size_t> farthest_point_subset(const std::vector<Vec2>& points, std::size_t k);

struct AnnotationSet {
  ImageDims dims;
  std::vector<std::string> image_ids;  // sorted
  // Full annotated polylines in raster pixels, canonical labels, circle unsplit.
  std::vector<ImageAnnotations> annotations;
  // Point-selected NDC observations per image, central circle split when possible.
  std::vector<SampleObservations> observations;
};

// Converts one image's raster annotations into loss observations: applies the
// central-circle split, selects at most `limits` points per segment and maps
// pixels to NDC.
SampleObservations observations_from_annotations(const ImageAnnotations& annotations,
                                                 const CalibrationObject& object, const ImageDims& dims,
                                                 const BatchLimits& limits = {});

// Parses annotations in the public release layout: label -> [{"x", "y"}] with
// normalized [0, 1] coordinates. Accepts a single-image object (id `fallback_id`)
// or {"images": {id: object}}.
AnnotationSet parse_annotations(const nlohmann::json& doc, const CalibrationObject& object,
                                const ImageDims& dims, const std::string& fallback_id = "0",
                                const BatchLimits& limits = {});

// Reads a JSON file or every *.json file of a directory (id = file stem).
AnnotationSet load_annotations(const std::filesystem::path& path, const CalibrationObject& object,
                               const ImageDims& dims, const BatchLimits& limits = {});

// Inverse of parse_annotations for one image: raster pixels -> normalized.
nlohmann::json annotations_to_json(const ImageAnnotations& annotations, const ImageDims& dims);

// World-side alignment matrices. A homography H in `axis` (image -> world)
// becomes pre * H * post in the SoccerNet frame.
struct Alignment {
  Mat3 pre = Mat3::Identity();
  Mat3 post = Mat3::Identity();
};

inline constexpr double kYardsToMeters = 0.9144;

struct AlignmentOptions {
  double wc14_length = 115.0;  // yards
  double wc14_width = 74.0;
  double chen_length = 105.0;  // meters
  double chen_width = 68.0;
  double jiang_image_width = 1280.0;
  double jiang_image_height = 720.0;
};

Alignment alignment_for(AxisSystem from, const AlignmentOptions& options = {});

// Maps an image->world homography of another axis system onto the SoccerNet
// frame. SoccerNet input is returned unchanged.
Homography align_homography(const Homography& h, const AlignmentOptions& options = {});

// Inverse of align_homography: SoccerNet -> `to`.
Homography unalign_homography(const Homography& h, AxisSystem to, const AlignmentOptions& options = {});

// Homography files: nine numbers (row-major text) or JSON
// {"homography": [[...], ...] | [9 numbers], "axis_system": "...", "direction": "..."}.
// Without an explicit direction, SoccerNet matrices are world->image and the
// other systems image->world.
Homography parse_homography_json(const nlohmann::json& doc);
Homography load_homography(const std::filesystem::path& path);
nlohmann::json homography_to_json(const Homography& h);

struct CameraRecord {
  std::string image_id;
  CameraParams phi;
  RadialDistortion psi;
  ImageDims dims;
  double loss = 0.0;
  std::string hypothesis;
  bool verified = false;
};

nlohmann::json camera_to_json(const CameraRecord& record);
CameraRecord camera_from_json(const nlohmann::json& doc);

void save_camera(const CameraRecord& record, const std::filesystem::path& path);
CameraRecord load_camera(const std::filesystem::path& path);

// Writes JSON with sorted keys, two-space indentation and every floating point
// value printed with six decimals; non-finite numbers become null.
std::string dump_stable(const nlohmann::json& doc);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

struct ImageReport {
  std::string image_id;
  double loss = 0.0;
  bool verified = false;
  std::vector<EvalCounts> counts;               // one per threshold
  std::map<std::string, double> segment_error;  // mean annotated-point distance, px
  double iou_part = -1.0;                       // < 0 when not evaluated
  double iou_whole = -1.0;
};

struct ThresholdSweepEntry {
  double tau = 0.0;
  double cr = 0.0;
  std::vector<double> accuracy;
};

struct ReportSummary {
  std::vector<double> thresholds;
  std::vector<double> accuracy;
  std::size_t delivered = 0;
  std::size_t total = 0;
  double cr = 0.0;
  double cs = 0.0;  // NaN unless thresholds contain 5, 10 and 20
  double tau = 0.0;
  std::vector<double> iou_part;
  std::vector<double> iou_whole;
  std::vector<ThresholdSweepEntry> sweep;
};

// CSV rows sorted by image id, fixed column order.
std::string report_csv(const std::vector<ImageReport>& rows, const std::vector<double>& thresholds);
nlohmann::json report_summary_json(const ReportSummary& summary);
void write_report(const std::vector<ImageReport>& rows, const ReportSummary& summary,
                  const std::filesystem::path& csv_path, const std::filesystem::path& json_path);

struct RunConfig {
  OptimizerConfig optimizer;
  std::vector<ParamDistribution> hypotheses;
  ImageDims dims;
  BatchLimits limits;
};

// Keys: lr_max, weight_decay, steps, pct_start, tau, n_pc_samples,
// optimize_distortion, distortion_lr_max, distortion_pct_start,
// image_width, image_height, max_line_points, max_point_cloud_points, and
// either "hypotheses" (list of ranges in degrees/meters) or
// "hypothesis_preset" ("published" or "main_tribune"). Unknown keys are
// rejected with kMalformedInput.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& config);
nlohmann::json distribution_to_json(const ParamDistribution& d);

}  // namespace fieldcalib
