#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "fieldcalib/types.hpp"

using namespace fieldcalib::cli;

int main(int argc, char** argv) {
  CLI::App app{"Sports-field camera calibration from segment annotations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fieldcalib::version()));

  int env_jobs = 1;
  try {
    env_jobs = default_jobs();
  } catch (const fieldcalib::Error& e) {
    std::cerr << "fieldcalib: " << e.what() << "\n";
    return kExitMalformed;
  }

  CalibrateOptions cal;
  cal.jobs = env_jobs;
  double cal_tau = 0.0;
  auto* calibrate = app.add_subcommand("calibrate", "Estimate camera parameters for annotated images");
  calibrate->add_option("annotations", cal.annotations, "Annotation JSON file or directory")->required();
  calibrate->add_option("-c,--config", cal.config, "Run configuration (JSON)")->required();
  calibrate->add_option("-o,--out", cal.out_dir, "Output directory")->required();
  calibrate->add_option("--mode", cal.mode, "argmin or stacked=<hypothesis>")->capture_default_str();
  auto* tau_opt = calibrate->add_option("--tau", cal_tau, "Self-verification threshold (NDC loss)");
  calibrate->add_flag("--distortion", cal.distortion, "Also optimize radial distortion k1, k2");
  calibrate->add_option("--seed", cal.seed, "Run seed, recorded in the manifest")->capture_default_str();
  calibrate->add_flag("--trace", cal.trace, "Write per-step loss traces");
  calibrate->add_option("-j,--jobs", cal.jobs, "Worker threads (default: FIELDCALIB_JOBS or 1)")
      ->check(CLI::PositiveNumber);

  DecomposeOptions dec;
  auto* decompose = app.add_subcommand("decompose", "Camera parameters from a field-plane homography");
  decompose->add_option("homography", dec.homography, "Homography file or directory")->required();
  decompose->add_option("-o,--out", dec.out, "Camera JSON (directory for directory input)")->required();
  decompose->add_option("--dims", dec.dims, "Image size WxH")->capture_default_str();
  decompose->add_option("--zeta", dec.zeta, "Outlier cutoff for refinement keypoints (px)")->capture_default_str();
  decompose->add_flag("--no-refine", dec.no_refine, "Skip the pose refinement");

  EvaluateOptions ev;
  double ev_tau = 0.0;
  auto* evaluate = app.add_subcommand("evaluate", "Score predicted cameras against annotations");
  evaluate->add_option("predictions", ev.predictions, "Directory of camera JSON (or a calibrate output)")->required();
  evaluate->add_option("annotations", ev.annotations, "Annotation JSON file or directory")->required();
  evaluate->add_option("-o,--out", ev.out_dir, "Report directory (default: the prediction directory)");
  evaluate->add_option("--thresholds", ev.thresholds, "Pixel thresholds")->delimiter(',')->capture_default_str();
  auto* ev_tau_opt = evaluate->add_option("--tau", ev_tau, "Deliver images with loss <= tau instead of stored verdicts");
  evaluate->add_option("--iou", ev.iou_dir, "Directory of ground-truth homographies for IoU");
  evaluate->add_option("--dims", ev.dims, "Image size WxH (default: from the cameras)");

  SynthOptions syn;
  syn.jobs = env_jobs;
  double tilt_min = 0.0, tilt_max = 0.0;
  auto* synth = app.add_subcommand("synth", "Render synthetic annotations from sampled cameras");
  synth->add_option("-o,--out", syn.out_dir, "Output directory")->required();
  synth->add_option("-n,--count", syn.count, "Number of scenes")->capture_default_str();
  synth->add_option("--seed", syn.seed, "Sampling and noise seed")->capture_default_str();
  synth->add_option("--noise", syn.noise, "Gaussian pixel noise sigma")->capture_default_str();
  synth->add_option("--hypothesis", syn.hypothesis, "Camera prior to sample from")->capture_default_str();
  synth->add_option("--preset", syn.preset, "main_tribune or published")->capture_default_str();
  synth->add_option("-c,--config", syn.config, "Take priors, image size and point limits from a run config");
  synth->add_option("--dims", syn.dims, "Image size WxH")->capture_default_str();
  auto* tmin = synth->add_option("--tilt-min", tilt_min, "Lower tilt bound override (degrees)");
  auto* tmax = synth->add_option("--tilt-max", tilt_max, "Upper tilt bound override (degrees)");
  synth->add_option("--k1", syn.k1, "Radial distortion k1")->capture_default_str();
  synth->add_option("--k2", syn.k2, "Radial distortion k2")->capture_default_str();
  synth->add_option("--min-segments", syn.min_segments, "Resample scenes with fewer visible segments")
      ->capture_default_str();
  synth->add_option("-j,--jobs", syn.jobs, "Worker threads (default: FIELDCALIB_JOBS or 1)")
      ->check(CLI::PositiveNumber);

  ReportOptions rep;
  double rep_tau = 0.0;
  auto* report = app.add_subcommand("report", "Summarize the verdicts of a calibrate run");
  report->add_option("run_dir", rep.run_dir, "Output directory of calibrate")->required();
  auto* rep_tau_opt = report->add_option("--tau", rep_tau, "Threshold to report CR at (default: the run's)");

  OverlayOptions ov;
  auto* overlay = app.add_subcommand("overlay", "Draw annotations and reprojected segments as SVG");
  overlay->add_option("camera", ov.camera, "Camera JSON")->required();
  overlay->add_option("annotations", ov.annotations, "Annotation JSON file or directory")->required();
  overlay->add_option("-o,--out", ov.out, "Output SVG")->required();
  overlay->add_option("--image-id", ov.image_id, "Image to draw (default: the camera's)");
  overlay->add_option("--dims", ov.dims, "Image size WxH (default: from the camera)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitMalformed;
  }

  if (*calibrate) {
    if (*tau_opt) cal.tau = cal_tau;
    return cmd_calibrate(cal);
  }
  if (*decompose) return cmd_decompose(dec);
  if (*evaluate) {
    if (*ev_tau_opt) ev.tau = ev_tau;
    return cmd_evaluate(ev);
  }
  if (*synth) {
    if (*tmin) syn.tilt_min = tilt_min;
    if (*tmax) syn.tilt_max = tilt_max;
    return cmd_synth(syn);
  }
  if (*report) {
    if (*rep_tau_opt) rep.tau = rep_tau;
    return cmd_report(rep);
  }
  if (*overlay) return cmd_overlay(ov);
  return kExitError;
}
