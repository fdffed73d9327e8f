#include "softjig/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "softjig/errors.hpp"

namespace softjig {

using nlohmann::json;

namespace {

// Reads one JSON object, tracking the dotted path for error messages and
// rejecting keys that were never consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where("") + "expected a JSON object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + "invalid value (" + e.what() + ")");
    }
  }

  template <typename T>
  void read_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    T v{};
    read(key, v);
    out = v;
  }

  void read_vec2(const char* key, double& x, double& y) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError(where(key) + "expected [x, y]");
    }
    x = v[0].get<double>();
    y = v[1].get<double>();
  }

  Section child(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(where(item.key()) + "unknown key");
    }
  }

  std::string where(const std::string& key) const {
    std::string p = path_;
    if (!key.empty()) p = p.empty() ? key : p + "." + key;
    return p.empty() ? std::string() : p + ": ";
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

// Re-raise a module-level DomainError as a ConfigError naming the section.
template <typename Fn>
void validate_section(const std::string& section, Fn&& fn) {
  try {
    fn();
  } catch (const DomainError& e) {
    throw ConfigError(section + ": " + e.what());
  }
}

// Detection sigma and margin, explicit or derived; threshold left unset.
LoGParams detect_geometry(const RunConfig& c) {
  // Expected spot sigma at mid-membrane depth. The LoG sigma equals it, i.e.
  // marker image radius (sqrt(2) * spot sigma) over sqrt(2).
  const double mid_depth = c.rig.camera_height + c.jig.membrane_rest_height / 2.0;
  const double spot_sigma = c.render.blur_sigma * c.rig.camera_height / mid_depth;
  LoGParams p = log_params_for_marker_radius(std::sqrt(2.0) * c.detect.sigma.value_or(spot_sigma),
                                             0.0);
  if (c.detect.border_margin) p.border_margin = *c.detect.border_margin;
  return p;
}

}  // namespace

void RunConfig::validate() const {
  validate_section("jig", [&] { jig.validate(); });
  validate_section("rig", [&] { rig.validate(); });
  check(render.blur_sigma > 0.0, "render.blur_sigma", "must be positive");
  check(render.noise_sigma >= 0.0, "render.noise_sigma", "must be non-negative");
  check(render.peak_intensity > 0.0, "render.peak_intensity", "must be positive");
  if (detect.sigma) check(*detect.sigma > 0.0, "detect.sigma", "must be positive");
  if (detect.border_margin) {
    check(*detect.border_margin >= 0, "detect.border_margin", "must be non-negative");
  }
  validate_section("detect", [&] { detect_geometry(*this).validate(); });
  validate_section("match", [&] { resolve_match_params(*this).validate(); });
  check(crop_margin_factor > 0.0 && crop_margin_factor <= 1.0, "crop.margin_factor",
        "must be in (0, 1]");
  validate_section("contact", [&] { contact.validate(jig); });
  check(sweep.samples >= 8, "sweep.samples", "must be at least 8");
  check(sweep.push_depth > 0.0 && sweep.push_depth < jig.membrane_rest_height,
        "sweep.push_depth", "must be in (0, membrane_rest_height)");
  check(sweep.reference_diameter > 0.0, "sweep.reference_diameter", "must be positive");
  check(sweep.reference_alpha > 0.0 && sweep.reference_alpha < 45.0, "sweep.reference_alpha",
        "must be in (0, 45)");
  check(!grid.diameters.empty(), "grid.diameters", "must not be empty");
  check(!grid.alphas.empty(), "grid.alphas", "must not be empty");
  for (double d : grid.diameters) check(d > 0.0, "grid.diameters", "entries must be positive");
  for (double a : grid.alphas) {
    check(a >= 0.0 && a < 45.0, "grid.alphas", "entries must be in [0, 45)");
  }
  check(threads >= 1, "threads", "must be at least 1");
  check(!output_dir.empty(), "output_dir", "must not be empty");
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Section root(j, "");

  Section jig = root.child("jig");
  jig.read("plate_side", c.jig.plate_side);
  jig.read("membrane_rest_height", c.jig.membrane_rest_height);
  jig.read("dome_radius", c.jig.dome_radius);
  jig.read("marker_pitch", c.jig.marker_pitch);
  jig.read("marker_radius", c.jig.marker_radius);
  std::vector<std::array<double, 2>> fid;
  jig.read("fiducials", fid);
  if (!fid.empty()) {
    check(fid.size() == 4, "jig.fiducials", "expected exactly 4 [x, y] points");
    for (std::size_t i = 0; i < 4; ++i) c.jig.fiducials[i] = Vec2(fid[i][0], fid[i][1]);
  }
  jig.finish();

  Section rig = root.child("rig");
  rig.read("focal_px", c.rig.focal_px);
  rig.read_vec2("principal_point", c.rig.cx, c.rig.cy);
  rig.read("width", c.rig.width);
  rig.read("height", c.rig.height);
  rig.read("baseline", c.rig.baseline);
  rig.read("camera_height", c.rig.camera_height);
  rig.finish();

  Section render = root.child("render");
  render.read("blur_sigma", c.render.blur_sigma);
  render.read("noise_sigma", c.render.noise_sigma);
  render.read("peak_intensity", c.render.peak_intensity);
  render.finish();

  Section detect = root.child("detect");
  detect.read_optional("sigma", c.detect.sigma);
  detect.read_optional("response_threshold", c.detect.response_threshold);
  detect.read_optional("border_margin", c.detect.border_margin);
  detect.finish();

  Section match = root.child("match");
  match.read_optional("max_row_diff", c.match.max_row_diff);
  match.read_optional("min_disparity", c.match.min_disparity);
  match.read_optional("max_disparity", c.match.max_disparity);
  match.finish();

  Section crop = root.child("crop");
  crop.read("margin_factor", c.crop_margin_factor);
  crop.finish();

  Section contact = root.child("contact");
  contact.read("diameter", c.contact.object_diameter);
  contact.read("alpha_deg", c.contact.tilt_alpha_deg);
  contact.read("theta_deg", c.contact.tilt_direction_deg);
  contact.read("push_depth", c.contact.push_depth);
  contact.finish();

  Section sweep = root.child("sweep");
  sweep.read("samples", c.sweep.samples);
  sweep.read("push_depth", c.sweep.push_depth);
  sweep.read("reference_diameter", c.sweep.reference_diameter);
  sweep.read("reference_alpha", c.sweep.reference_alpha);
  sweep.finish();

  Section grid = root.child("grid");
  grid.read("diameters", c.grid.diameters);
  grid.read("alphas", c.grid.alphas);
  grid.finish();

  root.read("register_with_fiducials", c.register_with_fiducials);
  root.read("seed", c.seed);
  root.read("threads", c.threads);
  root.read("output_dir", c.output_dir);
  root.finish();

  c.validate();
  return c;
}

namespace {

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

json config_to_json(const RunConfig& c) {
  json fid = json::array();
  for (const Vec2& f : c.jig.fiducials) fid.push_back({f.x(), f.y()});
  return {
      {"jig",
       {{"plate_side", c.jig.plate_side},
        {"membrane_rest_height", c.jig.membrane_rest_height},
        {"dome_radius", c.jig.dome_radius},
        {"marker_pitch", c.jig.marker_pitch},
        {"marker_radius", c.jig.marker_radius},
        {"fiducials", fid}}},
      {"rig",
       {{"focal_px", c.rig.focal_px},
        {"principal_point", {c.rig.cx, c.rig.cy}},
        {"width", c.rig.width},
        {"height", c.rig.height},
        {"baseline", c.rig.baseline},
        {"camera_height", c.rig.camera_height}}},
      {"render",
       {{"blur_sigma", c.render.blur_sigma},
        {"noise_sigma", c.render.noise_sigma},
        {"peak_intensity", c.render.peak_intensity}}},
      {"detect",
       {{"sigma", opt(c.detect.sigma)},
        {"response_threshold", opt(c.detect.response_threshold)},
        {"border_margin", opt(c.detect.border_margin)}}},
      {"match",
       {{"max_row_diff", opt(c.match.max_row_diff)},
        {"min_disparity", opt(c.match.min_disparity)},
        {"max_disparity", opt(c.match.max_disparity)}}},
      {"crop", {{"margin_factor", c.crop_margin_factor}}},
      {"contact",
       {{"diameter", c.contact.object_diameter},
        {"alpha_deg", c.contact.tilt_alpha_deg},
        {"theta_deg", c.contact.tilt_direction_deg},
        {"push_depth", c.contact.push_depth}}},
      {"sweep",
       {{"samples", c.sweep.samples},
        {"push_depth", c.sweep.push_depth},
        {"reference_diameter", c.sweep.reference_diameter},
        {"reference_alpha", c.sweep.reference_alpha}}},
      {"grid", {{"diameters", c.grid.diameters}, {"alphas", c.grid.alphas}}},
      {"register_with_fiducials", c.register_with_fiducials},
      {"seed", c.seed},
      {"threads", c.threads},
      {"output_dir", c.output_dir},
  };
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << config_to_json(c).dump(2) << "\n";
}

LoGParams resolve_detect_params(const RunConfig& c) {
  LoGParams p = detect_geometry(c);
  if (c.detect.response_threshold) {
    p.response_threshold = *c.detect.response_threshold;
  } else {
    // 10% of the peak response of a noiseless flat-contact reference scene.
    ContactSpec flat;
    flat.object_diameter = c.sweep.reference_diameter;
    flat.push_depth = c.sweep.push_depth;
    RenderParams clean = c.render;
    clean.noise_sigma = 0.0;
    const SceneFrame ref = generate_scene(c.jig, c.rig, flat, clean, c.seed);
    p.response_threshold = auto_response_threshold(ref.image_left, p.sigma);
  }
  return p;
}

StereoMatchParams resolve_match_params(const RunConfig& c) {
  StereoMatchParams p = default_match_params(c.rig, c.jig);
  if (c.match.max_row_diff) p.max_row_diff = *c.match.max_row_diff;
  if (c.match.min_disparity) p.min_disparity = *c.match.min_disparity;
  if (c.match.max_disparity) p.max_disparity = *c.match.max_disparity;
  return p;
}

SimSettings make_sim_settings(const RunConfig& c) {
  SimSettings s;
  s.geom = c.jig;
  s.rig = c.rig;
  s.render = c.render;
  s.pipeline.detect = resolve_detect_params(c);
  s.pipeline.detect.validate();
  s.pipeline.match = resolve_match_params(c);
  s.pipeline.register_with_fiducials = c.register_with_fiducials;
  s.crop_margin_factor = c.crop_margin_factor;
  s.master_seed = c.seed;
  s.threads = c.threads;
  return s;
}

}  // namespace softjig
