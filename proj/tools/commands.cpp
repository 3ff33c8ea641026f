#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "fieldcalib/dataset_io.hpp"
#include "fieldcalib/hdecomp.hpp"
#include "fieldcalib/metrics.hpp"
#include "fieldcalib/optimizer.hpp"
#include "fieldcalib/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fieldcalib::cli {

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int default_jobs() {
  const char* env = std::getenv("FIELDCALIB_JOBS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) {
    throw Error(ErrorCode::kMalformedInput, std::string("FIELDCALIB_JOBS must be a positive integer, got '") + env + "'");
  }
  return static_cast<int>(v);
}

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedInput:
    case ErrorCode::kUnknownLabel:
    case ErrorCode::kCoordinateRange:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kIo:
      return kExitMalformed;
    case ErrorCode::kOptimizationFailure:
      return kExitTotalFailure;
    default:
      return kExitError;
  }
}

template <typename Fn>
int guarded(const char* command, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    std::cerr << "fieldcalib " << command << ": " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    std::cerr << "fieldcalib " << command << ": malformed-input: " << e.what() << "\n";
    return kExitMalformed;
  } catch (const std::exception& e) {
    std::cerr << "fieldcalib " << command << ": " << e.what() << "\n";
    return kExitError;
  }
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. fn must not throw.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) fn(i);
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

ImageDims parse_dims(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument("no separator");
    std::size_t used = 0;
    const double w = std::stod(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("trailing characters");
    const std::string hs = text.substr(x + 1);
    const double h = std::stod(hs, &used);
    if (used != hs.size()) throw std::invalid_argument("trailing characters");
    if (!(w >= 1.0 && h >= 1.0)) throw std::invalid_argument("non-positive size");
    return {w, h};
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kMalformedInput, "image size must look like 960x540, got '" + text + "'");
  }
}

std::string fmt(double v, int decimals = 6) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos) s = std::string(buf + (buf[0] == '-'));
  return s;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Keeps every output path inside the output directory.
class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : root_(fs::absolute(dir).lexically_normal()) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + root_.string() + ": " + ec.message());
  }

  void write(const std::string& relative, const std::string& text) {
    const fs::path rel = fs::path(relative).lexically_normal();
    if (rel.is_absolute() || rel.empty() || *rel.begin() == "..") {
      throw Error(ErrorCode::kInvalidArgument, "refusing to write outside the output directory: " + relative);
    }
    const fs::path full = root_ / rel;
    fs::create_directories(full.parent_path());
    write_text(full, text);
    written_.insert(rel.generic_string());
  }

  const fs::path& root() const { return root_; }
  json listing() const { return json(std::vector<std::string>(written_.begin(), written_.end())); }

 private:
  fs::path root_;
  std::set<std::string> written_;
};

bool safe_id(const std::string& id) {
  return !id.empty() && id != "." && id != ".." && id.find('/') == std::string::npos &&
         id.find('\\') == std::string::npos;
}

void check_ids(const std::vector<std::string>& ids) {
  for (const auto& id : ids) {
    if (!safe_id(id)) throw Error(ErrorCode::kMalformedInput, "image id cannot be used as a file name: '" + id + "'");
  }
}

json manifest_base(const std::string& command, std::uint64_t seed) {
  json m;
  m["command"] = command;
  m["seed"] = seed;
  m["versions"] = {{"fieldcalib", version()},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  return m;
}

std::vector<double> tau_sweep_values() {
  std::vector<double> taus;
  for (int i = 13; i <= 25; ++i) taus.push_back(i * 1e-3);
  return taus;
}

// ---------------------------------------------------------------- calibrate

struct CalibrationJob {
  bool ok = false;
  std::string error;
  CalibrationResult result;
};

}  // namespace

int cmd_calibrate(const CalibrateOptions& opt) {
  return guarded("calibrate", [&] {
    if (!fs::exists(opt.config)) {
      throw Error(ErrorCode::kMalformedInput,
                  "config file not found: " + opt.config +
                      " (expected a JSON object with keys such as lr_max, weight_decay, steps, pct_start, tau, "
                      "n_pc_samples and hypotheses or hypothesis_preset)");
    }
    RunConfig config = load_config(opt.config);
    if (opt.tau) config.optimizer.tau = *opt.tau;
    if (opt.distortion) config.optimizer.optimize_distortion = true;
    config.optimizer.record_trace = opt.trace;
    config.optimizer.validate();

    SelectionMode mode;
    if (opt.mode == "argmin") {
      mode = SelectionMode::argmin();
    } else if (opt.mode.rfind("stacked=", 0) == 0) {
      mode = SelectionMode::stacked(opt.mode.substr(8));
      const bool known = std::any_of(config.hypotheses.begin(), config.hypotheses.end(),
                                     [&](const ParamDistribution& d) { return d.name == mode.selected; });
      if (!known) throw Error(ErrorCode::kMalformedInput, "no hypothesis named '" + mode.selected + "'");
    } else {
      throw Error(ErrorCode::kMalformedInput, "--mode must be argmin or stacked=<name>, got '" + opt.mode + "'");
    }

    const CalibrationObject object = build_soccer_field();
    const AnnotationSet set = load_annotations(opt.annotations, object, config.dims, config.limits);
    check_ids(set.image_ids);

    const std::size_t n = set.image_ids.size();
    std::vector<CalibrationJob> jobs(n);
    parallel_for(n, opt.jobs, [&](std::size_t i) {
      try {
        const auto obs = SegmentObservations::build(object, config.dims, {set.observations[i]}, config.limits);
        jobs[i].result = calibrate(obs, 0, object, config.hypotheses, config.optimizer, mode);
        jobs[i].ok = true;
      } catch (const std::exception& e) {
        jobs[i].error = e.what();
      }
    });

    // Single collector: all files are written here, in image order.
    OutputDir out(opt.out_dir);
    json verdicts = json::object();
    std::size_t delivered = 0, failed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& id = set.image_ids[i];
      const CalibrationJob& job = jobs[i];
      json v;
      if (!job.ok) {
        ++failed;
        v["status"] = "failed";
        v["loss"] = nullptr;
        v["verified"] = false;
        v["reason"] = job.error;
        verdicts[id] = v;
        continue;
      }
      const CalibrationResult& r = job.result;
      CameraRecord record{id, r.phi, r.psi, config.dims, r.final_loss, r.hypothesis, r.verified};
      out.write("cameras/" + id + ".json", dump_stable(camera_to_json(record)));
      if (opt.trace) {
        json trace;
        trace["image_id"] = id;
        trace["hypothesis"] = r.hypothesis;
        trace["loss"] = r.loss_trace;
        out.write("traces/" + id + ".json", dump_stable(trace));
      }
      if (r.verified) ++delivered;
      v["status"] = r.verified ? "delivered" : "rejected";
      v["loss"] = r.final_loss;
      v["verified"] = r.verified;
      v["hypothesis"] = r.hypothesis;
      json candidates = json::object();
      for (const auto& c : r.candidates) candidates[c.hypothesis] = c.final_loss;
      v["candidates"] = candidates;
      verdicts[id] = v;
    }
    json vdoc;
    vdoc["tau"] = config.optimizer.tau;
    vdoc["images"] = verdicts;
    out.write("verdicts.json", dump_stable(vdoc));

    const json effective = config_to_json(config);
    json manifest = manifest_base("calibrate", opt.seed);
    manifest["config"] = effective;
    manifest["config_hash"] = "fnv1a64:" + hex64(fnv1a(dump_stable(effective)));
    manifest["mode"] = opt.mode;
    manifest["annotations"] = opt.annotations;
    manifest["images"] = n;
    manifest["delivered"] = delivered;
    manifest["rejected"] = n - delivered - failed;
    manifest["failed"] = failed;
    manifest["outputs"] = out.listing();
    out.write("manifest.json", dump_stable(manifest));

    std::cout << "calibrated " << n << " image(s): " << delivered << " delivered, " << (n - delivered - failed)
              << " rejected, " << failed << " failed\n";
    if (n > 0 && failed == n) {
      std::cerr << "fieldcalib calibrate: optimization failed for every image\n";
      return kExitTotalFailure;
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------- decompose

int cmd_decompose(const DecomposeOptions& opt) {
  return guarded("decompose", [&] {
    const ImageDims dims = parse_dims(opt.dims);
    RefinementConfig rc;
    rc.zeta = opt.zeta;
    if (opt.no_refine) rc.max_iterations = 0;
    rc.validate();

    std::vector<fs::path> inputs;
    const bool dir_input = fs::is_directory(opt.homography);
    if (dir_input) {
      for (const auto& e : fs::directory_iterator(opt.homography)) {
        if (e.is_regular_file()) inputs.push_back(e.path());
      }
      std::sort(inputs.begin(), inputs.end());
    } else {
      inputs.push_back(opt.homography);
    }

    std::optional<OutputDir> out;
    if (dir_input) out.emplace(opt.out);
    std::size_t rejected = 0;
    for (const auto& path : inputs) {
      const Homography h = align_homography(load_homography(path));
      const DecompositionResult d = decompose(h, dims, rc);
      const std::string id = path.stem().string();
      if (d.rejected) {
        ++rejected;
        std::cerr << "fieldcalib decompose: " << id << ": rejected: " << d.reason << "\n";
        continue;
      }
      CameraRecord record{id, d.phi, {}, dims, std::numeric_limits<double>::quiet_NaN(), "homography", true};
      json doc = camera_to_json(record);
      doc["decomposition"] = {{"focal_px", d.focal},
                              {"refined", d.refined},
                              {"correspondences", d.correspondences_used},
                              {"rmse_initial_px", d.rmse_initial},
                              {"rmse_refined_px", d.rmse_refined}};
      if (out) {
        out->write(id + ".json", dump_stable(doc));
      } else {
        const fs::path target(opt.out);
        if (target.has_parent_path()) fs::create_directories(target.parent_path());
        write_text(target, dump_stable(doc));
      }
    }
    if (!inputs.empty() && rejected == inputs.size()) return kExitTotalFailure;
    return kExitOk;
  });
}

// ---------------------------------------------------------------- evaluate

namespace {

std::map<std::string, CameraRecord> load_predictions(const fs::path& dir) {
  fs::path cams = dir / "cameras";
  if (!fs::is_directory(cams)) cams = dir;
  if (!fs::is_directory(cams)) throw Error(ErrorCode::kIo, "prediction directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(cams)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, CameraRecord> out;
  for (const auto& f : files) {
    if (cams == dir && (f.filename() == "manifest.json" || f.filename() == "verdicts.json" ||
                        f.filename() == "summary.json")) {
      continue;
    }
    CameraRecord r = load_camera(f);
    if (r.image_id.empty()) r.image_id = f.stem().string();
    if (!out.emplace(r.image_id, r).second) {
      throw Error(ErrorCode::kMalformedInput, "duplicate prediction for image '" + r.image_id + "'");
    }
  }
  return out;
}

std::map<std::string, double> segment_errors(const ImagePrediction& pred, const ImageAnnotations& ann) {
  std::map<std::string, double> err;
  for (const auto& [label, pts] : ann) {
    const auto it = pred.find(label);
    if (it == pred.end() || pts.empty()) continue;
    double sum = 0.0;
    for (const auto& p : pts) sum += point_polyline_distance(p, it->second);
    err[label] = sum / static_cast<double>(pts.size());
  }
  return err;
}

}  // namespace

int cmd_evaluate(const EvaluateOptions& opt) {
  return guarded("evaluate", [&] {
    if (opt.thresholds.empty()) throw Error(ErrorCode::kMalformedInput, "--thresholds needs at least one value");
    for (double t : opt.thresholds) {
      if (!(t > 0.0)) throw Error(ErrorCode::kMalformedInput, "thresholds must be positive");
    }
    const auto preds = load_predictions(opt.predictions);

    ImageDims dims;
    if (!opt.dims.empty()) {
      dims = parse_dims(opt.dims);
    } else if (!preds.empty()) {
      dims = preds.begin()->second.dims;
    }
    const CalibrationObject object = build_soccer_field();
    AnnotationSet set;
    try {
      set = load_annotations(opt.annotations, object, dims);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kUnknownLabel) {
        throw Error(ErrorCode::kUnknownLabel, std::string("label space does not match the field model: ") + e.what());
      }
      throw;
    }
    const std::set<std::string> ann_ids(set.image_ids.begin(), set.image_ids.end());
    for (const auto& [id, rec] : preds) {
      if (!ann_ids.count(id)) throw Error(ErrorCode::kMalformedInput, "prediction '" + id + "' has no annotation");
    }

    const std::size_t n = set.image_ids.size();
    std::vector<ImageReport> rows(n);
    std::vector<bool> has_pred(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& id = set.image_ids[i];
      ImageReport& row = rows[i];
      row.image_id = id;
      row.loss = std::numeric_limits<double>::infinity();
      const auto it = preds.find(id);
      if (it == preds.end()) {
        row.counts.assign(opt.thresholds.size(), {});
        continue;
      }
      has_pred[i] = true;
      const CameraRecord& rec = it->second;
      row.loss = rec.loss;
      row.verified = opt.tau ? (std::isfinite(rec.loss) && rec.loss <= *opt.tau) : rec.verified;
      const ImagePrediction prediction = reproject_object(rec.phi, rec.psi, object, dims);
      const ImageAnnotations& ann = set.annotations[i];
      for (double t : opt.thresholds) row.counts.push_back(ac_at_t(prediction, ann, t));
      row.segment_error = segment_errors(prediction, ann);
      if (!opt.iou_dir.empty()) {
        const fs::path gt_path = fs::path(opt.iou_dir) / (id + ".json");
        if (fs::exists(gt_path)) {
          const Homography gt = align_homography(load_homography(gt_path));
          const Homography pred = homography_from_camera(rec.phi, dims);
          row.iou_part = iou_topview(pred, gt, dims, IouMode::kPart);
          row.iou_whole = iou_topview(pred, gt, dims, IouMode::kWhole);
        }
      }
    }

    auto accumulate = [&](const std::vector<bool>& delivered) {
      std::vector<EvalCounts> total(opt.thresholds.size());
      for (std::size_t i = 0; i < n; ++i) {
        if (!delivered[i]) continue;
        for (std::size_t k = 0; k < total.size(); ++k) total[k] += rows[i].counts[k];
      }
      std::vector<double> acc;
      for (const auto& c : total) acc.push_back(c.accuracy());
      return acc;
    };

    ReportSummary summary;
    summary.thresholds = opt.thresholds;
    summary.total = n;
    summary.tau = opt.tau ? *opt.tau : std::numeric_limits<double>::quiet_NaN();
    std::vector<bool> delivered(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      delivered[i] = has_pred[i] && rows[i].verified;
      if (!delivered[i]) continue;
      ++summary.delivered;
      if (rows[i].iou_part >= 0.0) summary.iou_part.push_back(rows[i].iou_part);
      if (rows[i].iou_whole >= 0.0) summary.iou_whole.push_back(rows[i].iou_whole);
    }
    summary.accuracy = accumulate(delivered);
    summary.cr = completeness_ratio(summary.delivered, n);
    summary.cs = std::numeric_limits<double>::quiet_NaN();
    double ac[3];
    bool all = true;
    for (int k = 0; k < 3; ++k) {
      const auto it = std::find(opt.thresholds.begin(), opt.thresholds.end(), kAccuracyThresholds[k]);
      if (it == opt.thresholds.end()) {
        all = false;
        break;
      }
      ac[k] = summary.accuracy[static_cast<std::size_t>(it - opt.thresholds.begin())];
    }
    if (all && n > 0) summary.cs = compound_score(ac[0], ac[1], ac[2], summary.cr);

    for (double tau : tau_sweep_values()) {
      std::vector<bool> d(n, false);
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = has_pred[i] && std::isfinite(rows[i].loss) && rows[i].loss <= tau;
        count += d[i];
      }
      summary.sweep.push_back({tau, completeness_ratio(count, n), accumulate(d)});
    }

    OutputDir out(opt.out_dir.empty() ? opt.predictions : opt.out_dir);
    out.write("report.csv", report_csv(rows, opt.thresholds));
    out.write("summary.json", dump_stable(report_summary_json(summary)));

    std::cout << "images " << n << ", delivered " << summary.delivered << ", CR " << fmt(summary.cr, 4);
    for (std::size_t k = 0; k < opt.thresholds.size(); ++k) {
      std::cout << ", AC@" << fmt(opt.thresholds[k], 0) << " " << fmt(summary.accuracy[k], 4);
    }
    if (std::isfinite(summary.cs)) std::cout << ", CS " << fmt(summary.cs, 6);
    std::cout << "\n";
    return kExitOk;
  });
}

// ---------------------------------------------------------------- synth

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct SynthScene {
  bool ok = false;
  std::string error;
  CameraParams phi;
  RenderedScene scene;
  std::uint64_t seed = 0;
};

}  // namespace

int cmd_synth(const SynthOptions& opt) {
  return guarded("synth", [&] {
    if (opt.count < 0) throw Error(ErrorCode::kMalformedInput, "--count must be >= 0");
    if (!(opt.noise >= 0.0)) throw Error(ErrorCode::kMalformedInput, "--noise must be >= 0");
    if (opt.min_segments < 1) throw Error(ErrorCode::kMalformedInput, "--min-segments must be >= 1");

    ImageDims dims = parse_dims(opt.dims);
    BatchLimits limits;
    std::vector<ParamDistribution> hyps;
    if (!opt.config.empty()) {
      const RunConfig config = load_config(opt.config);
      hyps = config.hypotheses;
      dims = config.dims;
      limits = config.limits;
    } else if (opt.preset == "main_tribune") {
      hyps = main_tribune_hypotheses();
    } else if (opt.preset == "published") {
      hyps = published_hypotheses();
    } else {
      throw Error(ErrorCode::kMalformedInput, "--preset must be main_tribune or published");
    }
    const auto hit = std::find_if(hyps.begin(), hyps.end(),
                                  [&](const ParamDistribution& d) { return d.name == opt.hypothesis; });
    if (hit == hyps.end()) throw Error(ErrorCode::kMalformedInput, "no hypothesis named '" + opt.hypothesis + "'");
    ParamDistribution dist = *hit;
    if (opt.tilt_min) dist.ranges[kTilt].lower = deg2rad(*opt.tilt_min);
    if (opt.tilt_max) dist.ranges[kTilt].upper = deg2rad(*opt.tilt_max);
    dist.validate();
    const RadialDistortion psi{opt.k1, opt.k2};

    const CalibrationObject object = build_soccer_field();
    const auto n = static_cast<std::size_t>(opt.count);
    std::vector<SynthScene> scenes(n);
    constexpr int kMaxAttempts = 1000;
    parallel_for(n, opt.jobs, [&](std::size_t i) {
      SynthScene& s = scenes[i];
      for (int attempt = 0; attempt < kMaxAttempts && !s.ok; ++attempt) {
        s.seed = splitmix64(splitmix64(opt.seed) ^ (i * 0x100000001b3ULL + static_cast<std::uint64_t>(attempt)));
        try {
          s.phi = sample_camera(dist, s.seed);
          RenderOptions ro;
          ro.noise_sigma = opt.noise;
          ro.seed = splitmix64(s.seed);
          ro.limits = limits;
          s.scene = render_observations(s.phi, psi, object, dims, ro);
          s.ok = s.scene.annotations.size() >= static_cast<std::size_t>(opt.min_segments);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kEmptyObservation) {
            s.error = e.what();
            return;
          }
        }
      }
      if (!s.ok && s.error.empty()) s.error = "no usable scene after repeated sampling";
    });

    OutputDir out(opt.out_dir);
    for (std::size_t i = 0; i < n; ++i) {
      if (!scenes[i].ok) throw Error(ErrorCode::kInvalidArgument, "scene " + std::to_string(i) + ": " + scenes[i].error);
      char id[24];
      std::snprintf(id, sizeof id, "%05zu", i);
      const SynthScene& s = scenes[i];
      out.write(std::string("annotations/") + id + ".json", dump_stable(annotations_to_json(s.scene.annotations, dims)));
      out.write(std::string("annotations_clean/") + id + ".json",
                dump_stable(annotations_to_json(s.scene.clean_annotations, dims)));
      CameraRecord record{id, s.phi, psi, dims, 0.0, dist.name, true};
      out.write(std::string("cameras/") + id + ".json", dump_stable(camera_to_json(record)));
      out.write(std::string("homographies/") + id + ".json",
                dump_stable(homography_to_json(homography_from_camera(s.phi, dims))));
    }
    json manifest = manifest_base("synth", opt.seed);
    manifest["count"] = n;
    manifest["noise_sigma"] = opt.noise;
    manifest["distribution"] = distribution_to_json(dist);
    manifest["radial_distortion"] = {{"k1", psi.k1}, {"k2", psi.k2}};
    manifest["image_width"] = dims.width;
    manifest["image_height"] = dims.height;
    manifest["outputs"] = out.listing();
    out.write("manifest.json", dump_stable(manifest));
    std::cout << "wrote " << n << " scene(s) to " << out.root().string() << "\n";
    return kExitOk;
  });
}

// ---------------------------------------------------------------- report

int cmd_report(const ReportOptions& opt) {
  return guarded("report", [&] {
    const fs::path path = fs::path(opt.run_dir) / "verdicts.json";
    json doc;
    try {
      doc = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kMalformedInput, path.string() + ": " + e.what());
    }
    const json& images = doc.at("images");
    const double tau = opt.tau ? *opt.tau : doc.at("tau").get<double>();

    std::vector<double> losses;
    std::map<std::string, std::size_t> by_hypothesis;
    std::size_t failed = 0, delivered = 0;
    for (const auto& [id, v] : images.items()) {
      if (v.at("loss").is_null()) {
        ++failed;
        continue;
      }
      const double loss = v.at("loss").get<double>();
      losses.push_back(loss);
      if (loss <= tau) ++delivered;
      ++by_hypothesis[v.value("hypothesis", std::string("?"))];
    }
    const std::size_t n = images.size();
    std::cout << "images      " << n << "\n";
    std::cout << "tau         " << fmt(tau) << "\n";
    std::cout << "delivered   " << delivered << " (CR " << fmt(completeness_ratio(delivered, n), 4) << ")\n";
    std::cout << "rejected    " << (n - delivered - failed) << "\n";
    std::cout << "failed      " << failed << "\n";
    if (!losses.empty()) {
      std::sort(losses.begin(), losses.end());
      std::cout << "loss        min " << fmt(losses.front()) << "  median " << fmt(median(losses)) << "  max "
                << fmt(losses.back()) << "\n";
    }
    for (const auto& [name, count] : by_hypothesis) {
      std::cout << "hypothesis  " << name << " " << count << "\n";
    }
    std::cout << "tau sweep\n";
    for (double t : tau_sweep_values()) {
      const auto k = static_cast<std::size_t>(std::count_if(losses.begin(), losses.end(), [&](double l) { return l <= t; }));
      std::cout << "  " << fmt(t, 3) << "  CR " << fmt(completeness_ratio(k, n), 4) << "\n";
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------- overlay

namespace {

std::string svg_points(const std::vector<Vec2>& pts) {
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ' ';
    s += fmt(pts[i].x(), 2) + "," + fmt(pts[i].y(), 2);
  }
  return s;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

int cmd_overlay(const OverlayOptions& opt) {
  return guarded("overlay", [&] {
    const CameraRecord cam = load_camera(opt.camera);
    const ImageDims dims = opt.dims.empty() ? cam.dims : parse_dims(opt.dims);
    const CalibrationObject object = build_soccer_field();
    const AnnotationSet set = load_annotations(opt.annotations, object, dims);

    const std::string wanted = !opt.image_id.empty() ? opt.image_id : cam.image_id;
    ImageAnnotations ann;
    const auto it = std::find(set.image_ids.begin(), set.image_ids.end(), wanted);
    if (it != set.image_ids.end()) {
      ann = set.annotations[static_cast<std::size_t>(it - set.image_ids.begin())];
    } else if (set.image_ids.size() == 1) {
      ann = set.annotations.front();
    } else {
      throw Error(ErrorCode::kMalformedInput, "no annotations for image '" + wanted + "'");
    }
    const ImagePrediction pred = reproject_object(cam.phi, cam.psi, object, dims);

    double max_dev = 0.0;
    for (const auto& [label, pts] : ann) {
      const auto p = pred.find(label);
      if (p == pred.end()) continue;
      for (const auto& x : pts) max_dev = std::max(max_dev, point_polyline_distance(x, p->second));
    }

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(dims.width, 0) << "\" height=\""
        << fmt(dims.height, 0) << "\" viewBox=\"0 0 " << fmt(dims.width, 0) << " " << fmt(dims.height, 0)
        << "\" data-max-deviation=\"" << fmt(max_dev, 6) << "\">\n";
    svg << "  <metadata data-image-id=\"" << xml_escape(cam.image_id) << "\" data-max-deviation-px=\""
        << fmt(max_dev, 6) << "\"/>\n";
    svg << "  <style>.annotation{fill:none;stroke:#d62728;stroke-width:2}"
           ".reprojection{fill:none;stroke:#1f77b4;stroke-width:1.5}</style>\n";
    svg << "  <g class=\"reprojections\">\n";
    for (const auto& [label, runs] : pred) {
      for (const auto& run : runs) {
        svg << "    <polyline class=\"reprojection\" data-label=\"" << xml_escape(label) << "\" points=\""
            << svg_points(run) << "\"/>\n";
      }
    }
    svg << "  </g>\n  <g class=\"annotations\">\n";
    for (const auto& [label, pts] : ann) {
      svg << "    <polyline class=\"annotation\" data-label=\"" << xml_escape(label) << "\" points=\""
          << svg_points(pts) << "\"/>\n";
    }
    svg << "  </g>\n</svg>\n";

    const fs::path target(opt.out);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    write_text(target, svg.str());
    return kExitOk;
  });
}

}  // namespace fieldcalib::cli
