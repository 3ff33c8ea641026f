#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fieldcalib/camera.hpp"
#include "fieldcalib/reprojection_loss.hpp"

namespace fieldcalib {

inline constexpr int kNumCameraParams = 7;  // fov, pan, tilt, roll, t_x, t_y, t_z

struct ParamRange {
  double lower = 0.0;
  double upper = 1.0;
};

// Uniform prior per camera parameter (radians / meters). The optimizer works
// on standardized coordinates theta with phi = mean + sigma * theta, where
// sigma makes the uniform range the ~95% interval of a normal distribution.
struct ParamDistribution {
  std::string name;
  std::array<ParamRange, kNumCameraParams> ranges{};

  double mean(int i) const;
  double sigma(int i) const;
  void validate() const;

  CameraParams destandardize(const Eigen::Matrix<double, kNumCameraParams, 1>& theta) const;
  Eigen::Matrix<double, kNumCameraParams, 1> standardize(const CameraParams& phi) const;
};

inline constexpr double kNormal95 = 1.96;

// Ranges in degrees and meters; converted to radians on construction.
struct DistributionSpec {
  std::string name;
  ParamRange fov_deg, pan_deg, tilt_deg, roll_deg, t_x, t_y, t_z;
};
ParamDistribution make_distribution(const DistributionSpec& spec);

// Main-tribune priors ("center", "left", "right"). The left/right hypotheses
// shift the camera along the field length to the penalty-area lines.
std::vector<ParamDistribution> main_tribune_hypotheses();

// The position ranges exactly as published, kept for comparison runs.
std::vector<ParamDistribution> published_hypotheses();

struct OptimizerConfig {
  double lr_max = 0.05;
  double weight_decay = 0.01;
  int steps = 2000;
  double pct_start = 0.5;
  double tau = 0.019;
  bool optimize_distortion = false;
  double distortion_lr_max = 1e-3;
  double distortion_pct_start = 0.33;
  std::size_t n_pc_samples = 128;
  bool record_trace = false;

  void validate() const;
};

struct OneCycleSchedule {
  double lr_max = 0.05;
  int steps = 2000;
  double pct_start = 0.5;
  double div_factor = 25.0;
  double final_div_factor = 1e4;

  double operator()(int step) const;
};

double one_cycle_lr(int step, const OptimizerConfig& config);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;

  explicit AdamState(Eigen::Index n = 0) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// Decoupled weight decay Adam step, in place. Throws kNonFiniteGradient.
void adamw_step(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::VectorXd& gradient, AdamState& state,
                double lr, double weight_decay);

struct SelectionMode {
  enum class Kind { kArgmin, kStacked } kind = Kind::kArgmin;
  std::string selected;

  static SelectionMode argmin() { return {}; }
  static SelectionMode stacked(std::string name) { return {Kind::kStacked, std::move(name)}; }
};

struct HypothesisOutcome {
  std::string hypothesis;
  CameraParams phi;
  RadialDistortion psi;
  double final_loss = 0.0;  // +inf when the run failed
  std::vector<double> loss_trace;
};

struct CalibrationResult {
  CameraParams phi;
  RadialDistortion psi;
  double final_loss = 0.0;
  std::string hypothesis;
  std::vector<double> loss_trace;
  bool verified = false;
  std::vector<HypothesisOutcome> candidates;
};

// Runs one hypothesis from theta = 0 (the distribution mean).
HypothesisOutcome run_hypothesis(const SegmentObservations& obs, std::size_t sample,
                                 const LossGeometry& geometry, const ParamDistribution& hypothesis,
                                 const OptimizerConfig& config);

// Optimizes every hypothesis and returns the argmin-loss one (or the selected
// one in stacked mode). Throws kEmptyObservation for an empty sample and
// kOptimizationFailure when no hypothesis yields a finite loss.
CalibrationResult calibrate(const SegmentObservations& obs, std::size_t sample,
                            const CalibrationObject& object,
                            const std::vector<ParamDistribution>& hypotheses,
                            const OptimizerConfig& config, const SelectionMode& mode = {});

bool self_verify(const CalibrationResult& result, double tau);

}  // namespace fieldcalib
