#include "lipdyn/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "binary_io.hpp"
#include "lipdyn/error.hpp"

namespace lipdyn {

namespace {

// Shortest text that parses back to the same double.
std::string to_text(double v) {
  char buf[40];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}
std::string to_text(int v) { return std::to_string(v); }
std::string to_text(std::uint64_t v) { return std::to_string(v); }
std::string to_text(bool v) { return v ? "true" : "false"; }

template <typename T>
bool from_text(const std::string& s, T& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

bool from_text(const std::string& s, double& out) {
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  double v;
  if (!(in >> v) || !in.eof()) return false;
  out = v;
  return true;
}

bool from_text(const std::string& s, bool& out) {
  if (s == "true" || s == "1") {
    out = true;
  } else if (s == "false" || s == "0") {
    out = false;
  } else {
    return false;
  }
  return true;
}

// Calls f(key, field) for every extraction option.
template <typename Extract, typename F>
void visit_extract(Extract& e, F&& f) {
  f("roi.margin", e.crop.margin);
  f("contour.degree", e.fit.degree);
  f("contour.reparam_iterations", e.fit.reparam_iterations);
  f("texture.sigma", e.texture.sigma);
  f("texture.glcm_levels", e.texture.glcm.levels);
  f("texture.glcm_distance", e.texture.glcm.distance);
  f("lipprint.clahe_clip", e.preprocess.clahe_clip);
  f("lipprint.clahe_tiles", e.preprocess.clahe_tiles);
  f("lipprint.canny_low", e.preprocess.canny_low);
  f("lipprint.canny_high", e.preprocess.canny_high);
  f("lipprint.canny_aperture", e.preprocess.canny_aperture);
  f("lipprint.bilateral_diameter", e.preprocess.bilateral_diameter);
  f("lipprint.bilateral_sigma_color", e.preprocess.bilateral_sigma_color);
  f("lipprint.bilateral_sigma_space", e.preprocess.bilateral_sigma_space);
  f("lipprint.mask_erode", e.preprocess.mask_erode);
  f("hough.rho", e.hough.rho);
  f("hough.theta_deg", e.hough.theta_deg);
  f("hough.threshold", e.hough.threshold);
  f("hough.min_length", e.hough.min_length);
  f("hough.max_gap", e.hough.max_gap);
  f("lines.min_length", e.filter.min_length);
  f("lines.min_angle", e.filter.min_angle);
  f("lines.max_angle", e.filter.max_angle);
  f("match.w_center", e.match.w_center);
  f("match.w_length", e.match.w_length);
  f("match.w_angle", e.match.w_angle);
  f("match.max_center_distance", e.match.max_center_distance);
  f("openness.t1", e.openness_t1);
  f("openness.t2", e.openness_t2);
  f("window.length", e.window);
  f("window.stride", e.stride);
}

template <typename C, typename F>
void visit(C& c, F&& f) {
  visit_extract(c.extract, f);
  f("network.channels", c.network.channels);
  f("network.kernel", c.network.kernel);
  f("network.pool_bins", c.network.pool_bins);
  f("network.embedding_dim", c.network.embedding_dim);
  f("train.learning_rate", c.training.learning_rate);
  f("train.momentum", c.training.momentum);
  f("train.batch_size", c.training.batch_size);
  f("train.epochs", c.training.epochs);
  f("train.margin", c.training.margin);
  f("eval.folds", c.folds);
  f("eval.subject_disjoint", c.subject_disjoint);
  f("eval.pr_steps", c.pr_steps);
  f("attack.deepfake_alpha", c.deepfake_alpha);
  f("verify.smooth_window", c.smooth_window);
  f("synth.subjects", c.synth.subjects);
  f("synth.windows", c.synth.windows);
  f("synth.fps", c.synth.fps);
  f("synth.landmark_jitter", c.synth.landmark_jitter);
  f("synth.width", c.synth.width);
  f("synth.height", c.synth.height);
  f("seed", c.seed);
}

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, std::string(key) + ": " + what);
}

}  // namespace

eval::EvalConfig Config::eval_config() const {
  eval::EvalConfig e;
  e.folds = folds;
  e.subject_disjoint = subject_disjoint;
  e.seed = seed;
  e.pr_steps = pr_steps;
  e.network = network;
  e.network.input_dim = verifier::layout::kDim;
  e.training = training;
  e.training.seed = seed;
  e.deepfake_alpha = deepfake_alpha;
  return e;
}

void validate(const Config& c) {
  const auto& e = c.extract;
  require(std::isfinite(e.crop.margin) && e.crop.margin >= 0.0, "roi.margin", "must be >= 0");
  require(e.fit.degree >= 2 && e.fit.degree <= 8, "contour.degree", "must be in [2, 8]");
  require(e.fit.reparam_iterations >= 0, "contour.reparam_iterations", "must be >= 0");
  require(e.texture.sigma > 0.0 && e.texture.sigma <= 10.0, "texture.sigma", "must be in (0, 10]");
  require(e.texture.glcm.levels >= 2 && e.texture.glcm.levels <= 256, "texture.glcm_levels",
          "must be in [2, 256]");
  require(e.texture.glcm.distance >= 1, "texture.glcm_distance", "must be >= 1");
  require(e.preprocess.clahe_clip > 0.0, "lipprint.clahe_clip", "must be > 0");
  require(e.preprocess.clahe_tiles >= 1, "lipprint.clahe_tiles", "must be >= 1");
  require(e.preprocess.canny_low >= 0.0 && e.preprocess.canny_high >= e.preprocess.canny_low,
          "lipprint.canny_high", "must be >= canny_low >= 0");
  require(e.preprocess.canny_aperture == 3 || e.preprocess.canny_aperture == 5 ||
              e.preprocess.canny_aperture == 7,
          "lipprint.canny_aperture", "must be 3, 5 or 7");
  require(e.preprocess.bilateral_diameter >= 1, "lipprint.bilateral_diameter", "must be >= 1");
  require(e.preprocess.bilateral_sigma_color > 0.0, "lipprint.bilateral_sigma_color",
          "must be > 0");
  require(e.preprocess.bilateral_sigma_space > 0.0, "lipprint.bilateral_sigma_space",
          "must be > 0");
  require(e.preprocess.mask_erode >= 0, "lipprint.mask_erode", "must be >= 0");
  require(e.hough.rho > 0.0, "hough.rho", "must be > 0");
  require(e.hough.theta_deg > 0.0 && e.hough.theta_deg <= 90.0, "hough.theta_deg",
          "must be in (0, 90]");
  require(e.hough.threshold >= 1, "hough.threshold", "must be >= 1");
  require(e.hough.min_length >= 0.0, "hough.min_length", "must be >= 0");
  require(e.hough.max_gap >= 0.0, "hough.max_gap", "must be >= 0");
  require(e.filter.min_length >= 0.0, "lines.min_length", "must be >= 0");
  require(e.filter.min_angle >= 0.0 && e.filter.min_angle <= e.filter.max_angle &&
              e.filter.max_angle <= 180.0,
          "lines.max_angle", "need 0 <= min_angle <= max_angle <= 180");
  require(e.match.w_center >= 0.0 && e.match.w_length >= 0.0 && e.match.w_angle >= 0.0,
          "match.w_center", "weights must be >= 0");
  require(e.match.max_center_distance > 0.0, "match.max_center_distance", "must be > 0");
  require(e.openness_t1 > 0.0 && e.openness_t1 < e.openness_t2 && e.openness_t2 < 1.0,
          "openness.t2", "need 0 < t1 < t2 < 1");
  require(e.window >= 2, "window.length", "must be >= 2");
  require(e.stride >= 1, "window.stride", "must be >= 1");
  require(c.folds >= 3, "eval.folds", "must be >= 3");
  require(c.deepfake_alpha >= 0.0 && c.deepfake_alpha <= 1.0, "attack.deepfake_alpha",
          "must be in [0, 1]");
  require(c.smooth_window >= 1, "verify.smooth_window", "must be >= 1");
  verifier::NetworkConfig n = c.network;
  n.input_dim = verifier::layout::kDim;
  verifier::validate(n);
  verifier::validate(c.training);
  synth::SynthOptions s = c.synth;
  s.window = e.window;
  s.stride = e.stride;
  synth::validate(s);
}

std::string dump_config(const Config& config) {
  std::string out;
  visit(config, [&](const char* key, const auto& v) {
    out += key;
    out += " = ";
    out += to_text(v);
    out += '\n';
  });
  return out;
}

Config parse_config(std::istream& in) {
  Config c;
  std::map<std::string, std::function<bool(const std::string&)>> setters;
  visit(c, [&](const char* key, auto& field) {
    setters[key] = [&field](const std::string& s) { return from_text(s, field); };
  });
  std::string line;
  std::size_t no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, "expected 'key = value'", no);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "'", no);
    if (!it->second(value)) {
      throw Error(ErrorCode::InvalidConfig, "bad value '" + value + "' for " + key, no);
    }
  }
  validate(c);
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  return parse_config(in);
}

namespace features {

std::uint64_t schema_hash(const ExtractOptions& options) {
  std::string text = "lipdyn-window-v1\n";
  visit_extract(options, [&](const char* key, const auto& v) {
    text += key;
    text += '=';
    text += to_text(v);
    text += '\n';
  });
  return detail::fnv1a64(text.data(), text.size());
}

}  // namespace features

}  // namespace lipdyn
