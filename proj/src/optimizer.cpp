#include "fieldcalib/optimizer.hpp"

#include <cmath>
#include <limits>

namespace fieldcalib {

using Theta = Eigen::Matrix<double, kNumCameraParams, 1>;

double ParamDistribution::mean(int i) const {
  const auto& r = ranges[static_cast<std::size_t>(i)];
  return r.lower + 0.5 * (r.upper - r.lower);
}

double ParamDistribution::sigma(int i) const {
  const auto& r = ranges[static_cast<std::size_t>(i)];
  return (r.upper - r.lower) / (2.0 * kNormal95);
}

void ParamDistribution::validate() const {
  for (int i = 0; i < kNumCameraParams; ++i) {
    const auto& r = ranges[static_cast<std::size_t>(i)];
    if (!std::isfinite(r.lower) || !std::isfinite(r.upper) || !(r.lower < r.upper)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "hypothesis '" + name + "' has an empty or non-finite range for parameter " +
                      std::to_string(i));
    }
  }
}

CameraParams ParamDistribution::destandardize(const Theta& theta) const {
  CameraParams phi;
  phi.fov = mean(kFov) + sigma(kFov) * theta[kFov];
  phi.pan = mean(kPan) + sigma(kPan) * theta[kPan];
  phi.tilt = mean(kTilt) + sigma(kTilt) * theta[kTilt];
  phi.roll = mean(kRoll) + sigma(kRoll) * theta[kRoll];
  for (int i = 0; i < 3; ++i) phi.position[i] = mean(kTx + i) + sigma(kTx + i) * theta[kTx + i];
  return phi;
}

Theta ParamDistribution::standardize(const CameraParams& phi) const {
  Theta theta;
  theta[kFov] = (phi.fov - mean(kFov)) / sigma(kFov);
  theta[kPan] = (phi.pan - mean(kPan)) / sigma(kPan);
  theta[kTilt] = (phi.tilt - mean(kTilt)) / sigma(kTilt);
  theta[kRoll] = (phi.roll - mean(kRoll)) / sigma(kRoll);
  for (int i = 0; i < 3; ++i) theta[kTx + i] = (phi.position[i] - mean(kTx + i)) / sigma(kTx + i);
  return theta;
}

ParamDistribution make_distribution(const DistributionSpec& spec) {
  auto rad = [](ParamRange r) { return ParamRange{deg2rad(r.lower), deg2rad(r.upper)}; };
  ParamDistribution d;
  d.name = spec.name;
  d.ranges = {rad(spec.fov_deg), rad(spec.pan_deg), rad(spec.tilt_deg), rad(spec.roll_deg),
              spec.t_x,          spec.t_y,          spec.t_z};
  d.validate();
  return d;
}

namespace {

DistributionSpec main_center_spec() {
  return {"center",    {8.2, 90.0}, {-45.0, 45.0}, {45.0, 90.0}, {-10.0, 10.0},
          {-16.5, 16.5}, {40.0, 110.0}, {-40.0, -5.0}};
}

}  // namespace

std::vector<ParamDistribution> main_tribune_hypotheses() {
  DistributionSpec center = main_center_spec();
  DistributionSpec left = center;
  left.name = "left";
  left.t_x = {-36.0 - 16.5, -36.0 + 16.5};
  DistributionSpec right = center;
  right.name = "right";
  right.t_x = {36.0 - 16.5, 36.0 + 16.5};
  return {make_distribution(center), make_distribution(left), make_distribution(right)};
}

std::vector<ParamDistribution> published_hypotheses() {
  DistributionSpec center = main_center_spec();
  center.t_x = {-40.0, -5.0};
  DistributionSpec left = center;
  left.name = "left";
  left.t_y = {-36.0 - 16.5, -36.0 + 16.5};
  DistributionSpec right = center;
  right.name = "right";
  right.t_y = {36.0 - 16.5, 36.0 + 16.5};
  return {make_distribution(center), make_distribution(left), make_distribution(right)};
}

void OptimizerConfig::validate() const {
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "steps must be >= 1");
  if (!(pct_start > 0.0 && pct_start < 1.0)) throw Error(ErrorCode::kInvalidArgument, "pct_start must lie in (0, 1)");
  if (!(distortion_pct_start > 0.0 && distortion_pct_start < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "distortion_pct_start must lie in (0, 1)");
  }
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tau must be positive");
  if (!(lr_max > 0.0) || !(distortion_lr_max > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rates must be positive");
  if (!(weight_decay >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "weight_decay must be >= 0");
  if (n_pc_samples < 2) throw Error(ErrorCode::kInvalidArgument, "n_pc_samples must be >= 2");
}

double OneCycleSchedule::operator()(int step) const {
  if (step < 0 || step >= steps) throw Error(ErrorCode::kInvalidArgument, "schedule step out of range");
  const double initial = lr_max / div_factor;
  const double floor = initial / final_div_factor;
  auto cosine = [](double from, double to, double pct) {
    return to + 0.5 * (from - to) * (1.0 + std::cos(kPi * pct));
  };
  // Warm-up ends at pct_start * steps; annealing reaches the floor on the last step.
  const double peak = pct_start * static_cast<double>(steps);
  const double s = static_cast<double>(step);
  if (s <= peak) return peak > 0.0 ? cosine(initial, lr_max, s / peak) : lr_max;
  const double span = static_cast<double>(steps - 1) - peak;
  return cosine(lr_max, floor, span > 0.0 ? (s - peak) / span : 1.0);
}

double one_cycle_lr(int step, const OptimizerConfig& config) {
  return OneCycleSchedule{config.lr_max, config.steps, config.pct_start}(step);
}

void adamw_step(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::VectorXd& gradient, AdamState& state,
                double lr, double weight_decay) {
  if (gradient.size() != theta.size() || state.m.size() != theta.size() || state.v.size() != theta.size()) {
    throw Error(ErrorCode::kInvalidArgument, "adamw_step: shape mismatch");
  }
  if (!gradient.allFinite()) throw Error(ErrorCode::kNonFiniteGradient, "gradient is not finite");
  ++state.step;
  theta *= 1.0 - lr * weight_decay;
  state.m = kAdamBeta1 * state.m + (1.0 - kAdamBeta1) * gradient;
  state.v = kAdamBeta2 * state.v + (1.0 - kAdamBeta2) * gradient.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  const Eigen::VectorXd denom = (state.v.cwiseSqrt() / std::sqrt(bc2)).array() + kAdamEps;
  theta -= (lr / bc1) * state.m.cwiseQuotient(denom);
}

HypothesisOutcome run_hypothesis(const SegmentObservations& obs, std::size_t sample,
                                 const LossGeometry& geometry, const ParamDistribution& hypothesis,
                                 const OptimizerConfig& config) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  HypothesisOutcome out;
  out.hypothesis = hypothesis.name;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(kNumCameraParams);
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(2);
  AdamState theta_state(kNumCameraParams);
  AdamState psi_state(2);
  const OneCycleSchedule schedule{config.lr_max, config.steps, config.pct_start};
  const OneCycleSchedule psi_schedule{config.distortion_lr_max, config.steps, config.distortion_pct_start};

  Theta sigma;
  for (int i = 0; i < kNumCameraParams; ++i) sigma[i] = hypothesis.sigma(i);

  auto current = [&] {
    out.phi = hypothesis.destandardize(Theta(theta));
    out.psi = {psi[0], psi[1]};
  };

  try {
    for (int step = 0; step < config.steps; ++step) {
      current();
      if (!is_valid(out.phi)) throw Error(ErrorCode::kOptimizationFailure, "camera left the valid range");
      const LossGradient lg = loss_and_gradient(obs, sample, geometry, out.phi, out.psi);
      if (!std::isfinite(lg.value)) throw Error(ErrorCode::kOptimizationFailure, "loss is not finite");
      if (config.record_trace) out.loss_trace.push_back(lg.value);

      const Eigen::VectorXd g_theta = lg.gradient.head<kNumCameraParams>().cwiseProduct(sigma);
      adamw_step(theta, g_theta, theta_state, schedule(step), config.weight_decay);
      if (config.optimize_distortion) {
        const Eigen::VectorXd g_psi = lg.gradient.tail<2>();
        adamw_step(psi, g_psi, psi_state, psi_schedule(step), config.weight_decay);
      }
    }
    current();
    out.final_loss = is_valid(out.phi) ? total_loss(obs, sample, geometry, out.phi, out.psi).total : kInf;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kEmptyObservation) throw;
    out.final_loss = kInf;
  }
  if (!std::isfinite(out.final_loss)) out.final_loss = kInf;
  return out;
}

CalibrationResult calibrate(const SegmentObservations& obs, std::size_t sample,
                            const CalibrationObject& object,
                            const std::vector<ParamDistribution>& hypotheses,
                            const OptimizerConfig& config, const SelectionMode& mode) {
  config.validate();
  if (hypotheses.empty()) throw Error(ErrorCode::kInvalidArgument, "at least one hypothesis required");
  if (sample >= obs.samples) throw Error(ErrorCode::kInvalidArgument, "sample index out of range");
  if (obs.observed_segments(sample) == 0) {
    throw Error(ErrorCode::kEmptyObservation, "sample has no annotated segments");
  }
  for (const auto& h : hypotheses) h.validate();

  const LossGeometry geometry(object, config.n_pc_samples);
  CalibrationResult result;
  for (const auto& h : hypotheses) {
    if (mode.kind == SelectionMode::Kind::kStacked && h.name != mode.selected) continue;
    result.candidates.push_back(run_hypothesis(obs, sample, geometry, h, config));
  }
  if (result.candidates.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no hypothesis named '" + mode.selected + "'");
  }

  const HypothesisOutcome* best = nullptr;
  for (const auto& c : result.candidates) {
    if (std::isfinite(c.final_loss) && (!best || c.final_loss < best->final_loss)) best = &c;
  }
  if (!best) throw Error(ErrorCode::kOptimizationFailure, "no hypothesis produced a finite loss");

  result.phi = best->phi;
  result.psi = best->psi;
  result.final_loss = best->final_loss;
  result.hypothesis = best->hypothesis;
  result.loss_trace = best->loss_trace;
  result.verified = self_verify(result, config.tau);
  return result;
}

bool self_verify(const CalibrationResult& result, double tau) { return result.final_loss <= tau; }

}  // namespace fieldcalib
