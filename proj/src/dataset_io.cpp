#include "fieldcalib/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/LU>

namespace fieldcalib {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::size_t> farthest_point_subset(const std::vector<Vec2>& points, std::size_t k) {
  const std::size_t n = points.size();
  std::vector<std::size_t> out;
  if (k >= n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  if (k == 0) return out;
  if (k == 1) return {0};

  std::size_t bi = 0, bj = 1;
  double best = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = (points[i] - points[j]).squaredNorm();
      if (d > best) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  }
  std::vector<bool> taken(n, false);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  auto take = [&](std::size_t s) {
    taken[s] = true;
    for (std::size_t i = 0; i < n; ++i) dist[i] = std::min(dist[i], (points[i] - points[s]).squaredNorm());
  };
  take(bi);
  take(bj);
  for (std::size_t m = 2; m < k; ++m) {
    std::size_t arg = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i] && (arg == n || dist[i] > dist[arg])) arg = i;
    }
    take(arg);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (taken[i]) out.push_back(i);
  }
  return out;
}

SampleObservations observations_from_annotations(const ImageAnnotations& annotations,
                                                 const CalibrationObject& object, const ImageDims& dims,
                                                 const BatchLimits& limits) {
  ImageAnnotations raster = annotations;
  const auto circle = raster.find(std::string(labels::kCircleCentral));
  if (circle != raster.end()) {
    const auto middle = raster.find(std::string(labels::kMiddleLine));
    if (middle != raster.end()) {
      CircleSplit split = split_central_circle(circle->second, middle->second);
      if (split.split) {
        raster.erase(circle);
        // A half with a single pixel carries no shape; keep it only if the
        // category accepts it.
        if (split.left.size() >= 2) raster[std::string(labels::kCircleCentralLeft)] = std::move(split.left);
        if (split.right.size() >= 2) raster[std::string(labels::kCircleCentralRight)] = std::move(split.right);
      }
    }
  }

  SampleObservations out;
  for (const auto& [label, pixels] : raster) {
    const Segment* seg = object.find(label);
    if (!seg) throw Error(ErrorCode::kUnknownLabel, "unknown segment label '" + label + "'");
    std::size_t cap = limits.line;
    if (seg->label.category == SegmentCategory::kPointCloud) cap = limits.point_cloud;
    if (seg->label.category == SegmentCategory::kPoint) cap = limits.point;
    std::vector<Vec2> ndc;
    for (std::size_t i : farthest_point_subset(pixels, cap)) ndc.push_back(raster_to_ndc(pixels[i], dims));
    if (!ndc.empty()) out.emplace(label, std::move(ndc));
  }
  return out;
}

namespace {

std::size_t min_points(const Segment& seg) { return seg.label.category == SegmentCategory::kPoint ? 1 : 2; }

ImageAnnotations parse_image(const json& image, const std::string& id, const CalibrationObject& object,
                             const ImageDims& dims) {
  if (!image.is_object()) throw Error(ErrorCode::kMalformedInput, "image '" + id + "': expected an object");
  ImageAnnotations out;
  for (const auto& [raw_label, pts] : image.items()) {
    const std::string label = canonical_label(raw_label);
    if (is_ignored_label(label)) continue;
    const Segment* seg = object.find(label);
    if (!seg) throw Error(ErrorCode::kUnknownLabel, "image '" + id + "': unknown segment label '" + raw_label + "'");
    if (!pts.is_array()) {
      throw Error(ErrorCode::kMalformedInput, "image '" + id + "', '" + label + "': expected a list of points");
    }
    std::vector<Vec2> pixels;
    for (const auto& p : pts) {
      if (!p.is_object() || !p.contains("x") || !p.contains("y") || !p["x"].is_number() || !p["y"].is_number()) {
        throw Error(ErrorCode::kMalformedInput, "image '" + id + "', '" + label + "': point needs numeric x and y");
      }
      const double x = p["x"].get<double>();
      const double y = p["y"].get<double>();
      if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
        throw Error(ErrorCode::kCoordinateRange,
                    "image '" + id + "', '" + label + "': coordinates must lie in [0, 1]");
      }
      pixels.emplace_back(x * dims.width, y * dims.height);
    }
    if (pixels.size() < min_points(*seg)) {
      throw Error(ErrorCode::kMalformedInput,
                  "image '" + id + "', '" + label + "': needs at least " + std::to_string(min_points(*seg)) + " points");
    }
    auto& dst = out[label];
    dst.insert(dst.end(), pixels.begin(), pixels.end());
  }
  return out;
}

}  // namespace

AnnotationSet parse_annotations(const json& doc, const CalibrationObject& object, const ImageDims& dims,
                                const std::string& fallback_id, const BatchLimits& limits) {
  if (!doc.is_object()) throw Error(ErrorCode::kMalformedInput, "annotation document must be an object");
  AnnotationSet set;
  set.dims = dims;
  std::map<std::string, ImageAnnotations> images;
  if (doc.contains("images")) {
    if (!doc["images"].is_object()) throw Error(ErrorCode::kMalformedInput, "'images' must map ids to annotations");
    for (const auto& [id, image] : doc["images"].items()) images[id] = parse_image(image, id, object, dims);
  } else {
    images[fallback_id] = parse_image(doc, fallback_id, object, dims);
  }
  for (auto& [id, ann] : images) {
    set.observations.push_back(observations_from_annotations(ann, object, dims, limits));
    set.image_ids.push_back(id);
    set.annotations.push_back(std::move(ann));
  }
  return set;
}

AnnotationSet load_annotations(const fs::path& path, const CalibrationObject& object, const ImageDims& dims,
                               const BatchLimits& limits) {
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    AnnotationSet set;
    set.dims = dims;
    for (const auto& f : files) {
      AnnotationSet one = load_annotations(f, object, dims, limits);
      for (std::size_t i = 0; i < one.image_ids.size(); ++i) {
        set.image_ids.push_back(one.image_ids[i]);
        set.annotations.push_back(std::move(one.annotations[i]));
        set.observations.push_back(std::move(one.observations[i]));
      }
    }
    std::set<std::string> unique(set.image_ids.begin(), set.image_ids.end());
    if (unique.size() != set.image_ids.size()) {
      throw Error(ErrorCode::kMalformedInput, path.string() + ": duplicate image ids");
    }
    return set;
  }
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, path.string() + ": " + e.what());
  }
  return parse_annotations(doc, object, dims, path.stem().string(), limits);
}

json annotations_to_json(const ImageAnnotations& annotations, const ImageDims& dims) {
  json out = json::object();
  for (const auto& [label, pixels] : annotations) {
    json pts = json::array();
    for (const auto& p : pixels) pts.push_back({{"x", p.x() / dims.width}, {"y", p.y() / dims.height}});
    out[label] = std::move(pts);
  }
  return out;
}

Alignment alignment_for(AxisSystem from, const AlignmentOptions& o) {
  auto translate = [](double x, double y) {
    Mat3 t = Mat3::Identity();
    t(0, 2) = x;
    t(1, 2) = y;
    return t;
  };
  Alignment a;
  switch (from) {
    case AxisSystem::kSoccerNet:
      break;
    case AxisSystem::kWc14:
    case AxisSystem::kJiang: {
      const Mat3 s = Eigen::Vector3d(kYardsToMeters, kYardsToMeters, 1.0).asDiagonal();
      a.pre = s * translate(-0.5 * o.wc14_length, -0.5 * o.wc14_width);
      if (from == AxisSystem::kJiang) {
        Mat3 tmpl = Mat3::Identity();
        tmpl(0, 0) = o.wc14_length;
        tmpl(0, 2) = 0.5 * o.wc14_length;
        tmpl(1, 1) = o.wc14_width;
        tmpl(1, 2) = 0.5 * o.wc14_width;
        Mat3 img = Mat3::Identity();
        img(0, 0) = o.jiang_image_width;
        img(0, 2) = 0.5 * o.jiang_image_width;
        img(1, 1) = o.jiang_image_height;
        img(1, 2) = 0.5 * o.jiang_image_height;
        a.pre = a.pre * tmpl;
        a.post = img.inverse();
      }
      break;
    }
    case AxisSystem::kChen: {
      const Mat3 flip = Eigen::Vector3d(1.0, -1.0, 1.0).asDiagonal();
      a.pre = flip * translate(-0.5 * o.chen_length, -0.5 * o.chen_width);
      break;
    }
  }
  return a;
}

namespace {

Mat3 as_image_to_world(const Homography& h) {
  return h.direction == HomographyDirection::kImageToWorld ? h.h : Mat3(h.h.inverse());
}

}  // namespace

Homography align_homography(const Homography& h, const AlignmentOptions& options) {
  if (h.axis_system == AxisSystem::kSoccerNet) return h;
  const Alignment a = alignment_for(h.axis_system, options);
  Homography out;
  out.h = a.pre * as_image_to_world(h) * a.post;
  out.axis_system = AxisSystem::kSoccerNet;
  out.direction = HomographyDirection::kImageToWorld;
  return out;
}

Homography unalign_homography(const Homography& h, AxisSystem to, const AlignmentOptions& options) {
  if (h.axis_system != AxisSystem::kSoccerNet) {
    throw Error(ErrorCode::kInvalidArgument, "unalign_homography expects a SoccerNet homography");
  }
  if (to == AxisSystem::kSoccerNet) return h;
  const Alignment a = alignment_for(to, options);
  Homography out;
  out.h = a.pre.inverse() * as_image_to_world(h) * a.post.inverse();
  out.axis_system = to;
  out.direction = HomographyDirection::kImageToWorld;
  return out;
}

namespace {

Mat3 matrix_from_json(const json& m) {
  Mat3 h;
  if (m.is_array() && m.size() == 9) {
    for (int i = 0; i < 9; ++i) {
      if (!m[i].is_number()) throw Error(ErrorCode::kMalformedInput, "homography entries must be numbers");
      h(i / 3, i % 3) = m[i].get<double>();
    }
    return h;
  }
  if (m.is_array() && m.size() == 3) {
    for (int r = 0; r < 3; ++r) {
      if (!m[r].is_array() || m[r].size() != 3) throw Error(ErrorCode::kMalformedInput, "homography must be 3x3");
      for (int c = 0; c < 3; ++c) {
        if (!m[r][c].is_number()) throw Error(ErrorCode::kMalformedInput, "homography entries must be numbers");
        h(r, c) = m[r][c].get<double>();
      }
    }
    return h;
  }
  throw Error(ErrorCode::kMalformedInput, "homography must be 3x3 or a list of 9 numbers");
}

HomographyDirection default_direction(AxisSystem axis) {
  return axis == AxisSystem::kSoccerNet ? HomographyDirection::kWorldToImage : HomographyDirection::kImageToWorld;
}

}  // namespace

Homography parse_homography_json(const json& doc) {
  Homography h;
  if (doc.is_array()) {
    h.h = matrix_from_json(doc);
    return h;
  }
  if (!doc.is_object() || !doc.contains("homography")) {
    throw Error(ErrorCode::kMalformedInput, "homography JSON needs a 'homography' entry");
  }
  h.h = matrix_from_json(doc["homography"]);
  try {
    if (doc.contains("axis_system")) h.axis_system = parse_axis_system(doc["axis_system"].get<std::string>());
  } catch (const json::exception&) {
    throw Error(ErrorCode::kMalformedInput, "axis_system must be a string");
  }
  h.direction = default_direction(h.axis_system);
  if (doc.contains("direction")) {
    const auto d = doc["direction"];
    if (d == "world_to_image") {
      h.direction = HomographyDirection::kWorldToImage;
    } else if (d == "image_to_world") {
      h.direction = HomographyDirection::kImageToWorld;
    } else {
      throw Error(ErrorCode::kMalformedInput, "direction must be 'world_to_image' or 'image_to_world'");
    }
  }
  if (!h.h.allFinite()) throw Error(ErrorCode::kMalformedInput, "homography entries must be finite");
  return h;
}

Homography load_homography(const fs::path& path) {
  const std::string text = read_text(path);
  if (path.extension() == ".json") {
    try {
      return parse_homography_json(json::parse(text));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kMalformedInput, path.string() + ": " + e.what());
    }
  }
  std::istringstream in(text);
  Homography h;
  for (int i = 0; i < 9; ++i) {
    if (!(in >> h.h(i / 3, i % 3))) {
      throw Error(ErrorCode::kMalformedInput, path.string() + ": expected nine numbers");
    }
  }
  std::string rest;
  if (in >> rest) throw Error(ErrorCode::kMalformedInput, path.string() + ": trailing content after nine numbers");
  return h;
}

json homography_to_json(const Homography& h) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({h.h(r, 0), h.h(r, 1), h.h(r, 2)});
  return {{"homography", rows},
          {"axis_system", to_string(h.axis_system)},
          {"direction", h.direction == HomographyDirection::kWorldToImage ? "world_to_image" : "image_to_world"}};
}

json camera_to_json(const CameraRecord& r) {
  const double f = focal_raster(r.phi.fov, r.dims);
  json j;
  j["image_id"] = r.image_id;
  j["pan_degrees"] = rad2deg(r.phi.pan);
  j["tilt_degrees"] = rad2deg(r.phi.tilt);
  j["roll_degrees"] = rad2deg(r.phi.roll);
  j["position_meters"] = {r.phi.position.x(), r.phi.position.y(), r.phi.position.z()};
  j["x_focal_length"] = f;
  j["y_focal_length"] = f;
  j["principal_point"] = {0.5 * r.dims.width, 0.5 * r.dims.height};
  j["radial_distortion"] = {r.psi.k1, r.psi.k2};
  j["loss"] = r.loss;
  j["hypothesis"] = r.hypothesis;
  j["verified"] = r.verified;
  return j;
}

CameraRecord camera_from_json(const json& j) {
  CameraRecord r;
  try {
    r.image_id = j.value("image_id", std::string());
    r.phi.pan = deg2rad(j.at("pan_degrees").get<double>());
    r.phi.tilt = deg2rad(j.at("tilt_degrees").get<double>());
    r.phi.roll = deg2rad(j.at("roll_degrees").get<double>());
    const auto& pos = j.at("position_meters");
    if (!pos.is_array() || pos.size() != 3) throw Error(ErrorCode::kMalformedInput, "position_meters needs 3 numbers");
    r.phi.position = {pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()};
    const auto& pp = j.at("principal_point");
    if (!pp.is_array() || pp.size() != 2) throw Error(ErrorCode::kMalformedInput, "principal_point needs 2 numbers");
    r.dims = {2.0 * pp[0].get<double>(), 2.0 * pp[1].get<double>()};
    r.phi.fov = fov_from_focal_raster(j.at("x_focal_length").get<double>(), r.dims);
    if (j.contains("radial_distortion")) {
      const auto& k = j["radial_distortion"];
      if (!k.is_array() || k.size() != 2) throw Error(ErrorCode::kMalformedInput, "radial_distortion needs 2 numbers");
      r.psi = {k[0].get<double>(), k[1].get<double>()};
    }
    const auto& loss = j.value("loss", json(0.0));
    r.loss = loss.is_null() ? std::numeric_limits<double>::infinity() : loss.get<double>();
    r.hypothesis = j.value("hypothesis", std::string());
    r.verified = j.value("verified", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("camera JSON: ") + e.what());
  }
  return r;
}

void save_camera(const CameraRecord& record, const fs::path& path) {
  write_text(path, dump_stable(camera_to_json(record)));
}

CameraRecord load_camera(const fs::path& path) {
  try {
    return camera_from_json(json::parse(read_text(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, path.string() + ": " + e.what());
  }
}

namespace {

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

void dump_value(const json& j, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [k, v] : j.items()) {  // std::map order: sorted keys
        if (!first) out += ",\n";
        first = false;
        out += inner + json(k).dump() + ": ";
        dump_value(v, indent + 1, out);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += inner;
        dump_value(j[i], indent + 1, out);
      }
      out += "\n" + pad + "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_fixed(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_stable(const json& doc) {
  std::string out;
  dump_value(doc, 0, out);
  out += "\n";
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, path.string() + ": cannot open for writing");
  f << text;
  if (!f) throw Error(ErrorCode::kIo, path.string() + ": write failed");
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, path.string() + ": cannot open for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string report_csv(const std::vector<ImageReport>& rows, const std::vector<double>& thresholds) {
  auto tname = [](double t) {
    std::string s = format_fixed(t);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s;
  };
  std::string out = "image_id,loss,verified";
  for (double t : thresholds) {
    const std::string n = tname(t);
    out += ",tp@" + n + ",fp@" + n + ",fn@" + n;
  }
  out += ",iou_part,iou_whole,segment_errors\n";

  std::vector<const ImageReport*> sorted;
  for (const auto& r : rows) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->image_id < b->image_id; });
  for (const auto* r : sorted) {
    out += r->image_id + "," + (std::isfinite(r->loss) ? format_fixed(r->loss) : "inf") + "," +
           (r->verified ? "1" : "0");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      const EvalCounts c = i < r->counts.size() ? r->counts[i] : EvalCounts{};
      out += "," + std::to_string(c.tp) + "," + std::to_string(c.fp) + "," + std::to_string(c.fn);
    }
    out += "," + (r->iou_part >= 0.0 ? format_fixed(r->iou_part) : std::string());
    out += "," + (r->iou_whole >= 0.0 ? format_fixed(r->iou_whole) : std::string());
    std::string segs;
    for (const auto& [label, err] : r->segment_error) {
      if (!segs.empty()) segs += ";";
      segs += label + "=" + (std::isfinite(err) ? format_fixed(err) : "inf");
    }
    out += ",\"" + segs + "\"\n";
  }
  return out;
}

json report_summary_json(const ReportSummary& s) {
  auto stats = [](const std::vector<double>& v) {
    if (v.empty()) return json(nullptr);
    double sum = 0.0;
    for (double x : v) sum += x;
    return json{{"mean", sum / static_cast<double>(v.size())}, {"median", median(v)}, {"count", v.size()}};
  };
  json ac = json::object();
  for (std::size_t i = 0; i < s.thresholds.size(); ++i) {
    ac[format_fixed(s.thresholds[i])] = s.accuracy[i];
  }
  json sweep = json::array();
  for (const auto& e : s.sweep) {
    json acc = json::object();
    for (std::size_t i = 0; i < s.thresholds.size() && i < e.accuracy.size(); ++i) {
      acc[format_fixed(s.thresholds[i])] = e.accuracy[i];
    }
    sweep.push_back({{"tau", e.tau}, {"cr", e.cr}, {"accuracy", acc}});
  }
  json j;
  j["accuracy"] = ac;
  j["completeness_ratio"] = s.cr;
  j["compound_score"] = std::isfinite(s.cs) ? json(s.cs) : json(nullptr);
  j["delivered"] = s.delivered;
  j["total"] = s.total;
  j["tau"] = s.tau;
  j["iou_part"] = stats(s.iou_part);
  j["iou_whole"] = stats(s.iou_whole);
  j["tau_sweep"] = sweep;
  return j;
}

void write_report(const std::vector<ImageReport>& rows, const ReportSummary& summary, const fs::path& csv_path,
                  const fs::path& json_path) {
  write_text(csv_path, report_csv(rows, summary.thresholds));
  write_text(json_path, dump_stable(report_summary_json(summary)));
}

namespace {

ParamRange range_from_json(const json& j, const std::string& key) {
  if (!j.contains(key)) throw Error(ErrorCode::kMalformedInput, "hypothesis is missing '" + key + "'");
  const auto& r = j[key];
  if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
    throw Error(ErrorCode::kMalformedInput, "hypothesis '" + key + "' must be [lower, upper]");
  }
  return {r[0].get<double>(), r[1].get<double>()};
}

const std::vector<std::string> kRangeKeys{"fov_deg", "pan_deg", "tilt_deg", "roll_deg", "t_x", "t_y", "t_z"};

ParamDistribution distribution_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kMalformedInput, "each hypothesis must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k != "name" && std::find(kRangeKeys.begin(), kRangeKeys.end(), k) == kRangeKeys.end()) {
      throw Error(ErrorCode::kMalformedInput, "unknown hypothesis key '" + k + "'");
    }
  }
  if (!j.contains("name") || !j["name"].is_string()) throw Error(ErrorCode::kMalformedInput, "hypothesis needs a name");
  DistributionSpec spec;
  spec.name = j["name"].get<std::string>();
  spec.fov_deg = range_from_json(j, "fov_deg");
  spec.pan_deg = range_from_json(j, "pan_deg");
  spec.tilt_deg = range_from_json(j, "tilt_deg");
  spec.roll_deg = range_from_json(j, "roll_deg");
  spec.t_x = range_from_json(j, "t_x");
  spec.t_y = range_from_json(j, "t_y");
  spec.t_z = range_from_json(j, "t_z");
  try {
    return make_distribution(spec);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedInput, e.what());
  }
}

}  // namespace

json distribution_to_json(const ParamDistribution& d) {
  json j;
  j["name"] = d.name;
  for (int i = 0; i < kNumCameraParams; ++i) {
    const auto& r = d.ranges[static_cast<std::size_t>(i)];
    const bool angle = i < 4;
    j[kRangeKeys[static_cast<std::size_t>(i)]] = {angle ? rad2deg(r.lower) : r.lower,
                                                   angle ? rad2deg(r.upper) : r.upper};
  }
  return j;
}

RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kMalformedInput, "config must be a JSON object");
  static const std::set<std::string> known{
      "lr_max",        "weight_decay",        "steps",         "pct_start",
      "tau",           "n_pc_samples",        "optimize_distortion", "distortion_lr_max",
      "distortion_pct_start", "image_width",  "image_height",  "max_line_points",
      "max_point_cloud_points", "hypotheses", "hypothesis_preset"};
  for (const auto& [k, v] : doc.items()) {
    if (!known.count(k)) throw Error(ErrorCode::kMalformedInput, "config: unknown key '" + k + "'");
  }
  RunConfig c;
  auto num = [&](const char* key, auto& dst) {
    if (!doc.contains(key)) return;
    const auto& v = doc[key];
    using T = std::decay_t<decltype(dst)>;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw Error(ErrorCode::kMalformedInput, std::string("config: '") + key + "' must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw Error(ErrorCode::kMalformedInput, std::string("config: '") + key + "' must be a non-negative integer");
      }
    } else {
      if (!v.is_number()) throw Error(ErrorCode::kMalformedInput, std::string("config: '") + key + "' must be a number");
    }
    dst = v.get<T>();
  };
  auto& o = c.optimizer;
  num("lr_max", o.lr_max);
  num("weight_decay", o.weight_decay);
  num("steps", o.steps);
  num("pct_start", o.pct_start);
  num("tau", o.tau);
  num("n_pc_samples", o.n_pc_samples);
  num("optimize_distortion", o.optimize_distortion);
  num("distortion_lr_max", o.distortion_lr_max);
  num("distortion_pct_start", o.distortion_pct_start);
  num("image_width", c.dims.width);
  num("image_height", c.dims.height);
  num("max_line_points", c.limits.line);
  num("max_point_cloud_points", c.limits.point_cloud);
  try {
    o.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("config: ") + e.what());
  }
  if (!(c.dims.width > 0.0 && c.dims.height > 0.0)) {
    throw Error(ErrorCode::kMalformedInput, "config: image dimensions must be positive");
  }
  if (c.limits.line < 2 || c.limits.point_cloud < 2) {
    throw Error(ErrorCode::kMalformedInput, "config: point limits must be at least 2");
  }

  if (doc.contains("hypotheses") && doc.contains("hypothesis_preset")) {
    throw Error(ErrorCode::kMalformedInput, "config: give either 'hypotheses' or 'hypothesis_preset'");
  }
  if (doc.contains("hypotheses")) {
    const auto& hs = doc["hypotheses"];
    if (!hs.is_array() || hs.empty()) throw Error(ErrorCode::kMalformedInput, "config: 'hypotheses' must be a non-empty list");
    std::set<std::string> names;
    for (const auto& h : hs) {
      c.hypotheses.push_back(distribution_from_json(h));
      if (!names.insert(c.hypotheses.back().name).second) {
        throw Error(ErrorCode::kMalformedInput, "config: duplicate hypothesis '" + c.hypotheses.back().name + "'");
      }
    }
  } else {
    const std::string preset = doc.value("hypothesis_preset", std::string("published"));
    if (preset == "published") {
      c.hypotheses = published_hypotheses();
    } else if (preset == "main_tribune") {
      c.hypotheses = main_tribune_hypotheses();
    } else {
      throw Error(ErrorCode::kMalformedInput, "config: unknown hypothesis_preset '" + preset + "'");
    }
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::kMalformedInput, path.string() + ": config file not found");
  try {
    return parse_config(json::parse(read_text(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, path.string() + ": " + e.what());
  }
}

json config_to_json(const RunConfig& c) {
  const auto& o = c.optimizer;
  json j;
  j["lr_max"] = o.lr_max;
  j["weight_decay"] = o.weight_decay;
  j["steps"] = o.steps;
  j["pct_start"] = o.pct_start;
  j["tau"] = o.tau;
  j["n_pc_samples"] = o.n_pc_samples;
  j["optimize_distortion"] = o.optimize_distortion;
  j["distortion_lr_max"] = o.distortion_lr_max;
  j["distortion_pct_start"] = o.distortion_pct_start;
  j["image_width"] = c.dims.width;
  j["image_height"] = c.dims.height;
  j["max_line_points"] = c.limits.line;
  j["max_point_cloud_points"] = c.limits.point_cloud;
  json hs = json::array();
  for (const auto& h : c.hypotheses) hs.push_back(distribution_to_json(h));
  j["hypotheses"] = hs;
  return j;
}

}  // namespace fieldcalib
