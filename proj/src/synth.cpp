#include "lipdyn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "lipdyn/error.hpp"
#include "lipdyn/ingest.hpp"
#include "lipdyn/lip_geometry.hpp"

namespace lipdyn::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;


std::array<cv::Point2d, kMouthLandmarkCount> rest_mouth(const SubjectParams& p) {
  const double a = 0.5 * p.width;
  const double g = 0.5 * p.rest_gap;
  const double uh = p.upper_thickness + g;
  const double lh = p.lower_thickness + g;
  const std::array<cv::Point2d, kMouthLandmarkCount> rel{{
      {-a, 0.0},
      {-0.65 * a, -0.72 * uh},
      {-0.3 * a, -uh},
      {0.0, -uh + p.bow_depth},
      {0.3 * a, -uh},
      {0.65 * a, -0.72 * uh},
      {a, 0.0},
      {0.62 * a, 0.72 * lh},
      {0.3 * a, lh},
      {0.0, 1.04 * lh},
      {-0.3 * a, lh},
      {-0.62 * a, 0.72 * lh},
      {-0.78 * a, 0.0},
      {-0.4 * a, -0.85 * g},
      {0.0, -g},
      {0.4 * a, -0.85 * g},
      {0.78 * a, 0.0},
      {0.4 * a, 0.85 * g},
      {0.0, g},
      {-0.4 * a, 0.85 * g},
  }};
  std::array<cv::Point2d, kMouthLandmarkCount> out;
  for (int k = 0; k < kMouthLandmarkCount; ++k) out[k] = p.center + rel[k];
  return out;
}

// Share of the jaw opening each mouth landmark follows (downward).
constexpr std::array<double, kMouthLandmarkCount> kJawShare{
    0.15, 0.0, -0.05, -0.05, -0.05, 0.0, 0.15,  // outer upper
    0.75, 0.95, 1.0, 0.95, 0.75,                 // outer lower
    0.3, -0.1, -0.12, -0.1, 0.3,                 // inner upper
    0.85, 1.0, 0.85};                            // inner lower

cv::Point2d lerp(cv::Point2d a, cv::Point2d b, double t) { return a + (b - a) * t; }

cv::Scalar scaled(const cv::Vec3d& bgr, double f) {
  return {std::clamp(bgr[0] * f, 0.0, 255.0), std::clamp(bgr[1] * f, 0.0, 255.0),
          std::clamp(bgr[2] * f, 0.0, 255.0)};
}

std::vector<cv::Point> fixed_point(std::span<const cv::Point2d> pts, int shift) {
  std::vector<cv::Point> out;
  out.reserve(pts.size());
  const double s = static_cast<double>(1 << shift);
  for (const auto& p : pts) {
    out.emplace_back(static_cast<int>(std::lround(p.x * s)), static_cast<int>(std::lround(p.y * s)));
  }
  return out;
}

}  // namespace

SubjectParams sample_subject(Rng& rng) {
  SubjectParams p;
  p.center = {rng.uniform(150.0, 170.0), rng.uniform(140.0, 155.0)};
  p.width = rng.uniform(150.0, 170.0);
  p.bow_depth = rng.uniform(2.0, 7.0);
  p.upper_thickness = rng.uniform(11.0, 17.0);
  p.lower_thickness = rng.uniform(14.0, 21.0);
  p.rest_gap = rng.uniform(3.0, 6.0);

  p.frequency_hz = rng.uniform(2.0, 3.2);
  p.jaw_phase = rng.uniform(0.0, kTwoPi);
  p.open_amplitude = rng.uniform(5.0, 11.0);
  p.secondary_hz = rng.uniform(0.6, 1.4);
  p.secondary_amplitude = rng.uniform(0.3, 1.0);
  for (int k = 0; k < kMouthLandmarkCount; ++k) {
    const bool inner = k >= 12;
    p.gain_x[k] = rng.uniform(0.8, inner ? 2.5 : 3.0);
    p.gain_y[k] = inner ? rng.uniform(0.4, 1.2) : rng.uniform(0.8, 3.0);
    p.phase_x[k] = rng.uniform(0.0, kTwoPi);
    p.phase_y[k] = rng.uniform(0.0, kTwoPi);
  }

  p.lip_bgr = {rng.uniform(70.0, 110.0), rng.uniform(60.0, 95.0), rng.uniform(150.0, 200.0)};
  p.skin_bgr = {rng.uniform(120.0, 160.0), rng.uniform(145.0, 180.0), rng.uniform(185.0, 225.0)};
  p.pixel_noise = rng.uniform(2.0, 4.0);
  const int count = 10 + static_cast<int>(rng.below(14));
  for (int i = 0; i < count; ++i) {
    Groove g;
    g.upper = (i % 2) == 0;
    g.u_outer = rng.uniform(0.12, 0.88);
    g.u_inner = std::clamp(g.u_outer + rng.uniform(-0.04, 0.04), 0.05, 0.95);
    g.v_start = rng.uniform(0.05, 0.2);
    g.v_end = rng.uniform(0.8, 0.95);
    g.darkness = rng.uniform(0.45, 0.75);
    g.thickness = 1 + static_cast<int>(rng.below(2));
    p.grooves.push_back(g);
  }
  return p;
}

void validate(const SynthOptions& o) {
  if (o.subjects < 2) throw Error(ErrorCode::InvalidConfig, "synthesis needs at least 2 subjects");
  if (o.windows < 1 || o.window < 2 || o.stride < 1) {
    throw Error(ErrorCode::InvalidConfig, "window count, length and stride must be positive");
  }
  if (!(o.fps > 0.0) || !(o.landmark_jitter >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "fps must be positive and jitter nonnegative");
  }
  if (o.width < 64 || o.height < 64) throw Error(ErrorCode::InvalidConfig, "frame too small");
}

int frame_count(const SynthOptions& o) { return o.window + o.stride * (o.windows - 1); }

std::array<cv::Point2d, kLandmarkCount> landmarks_at(const SubjectParams& p, double t,
                                                     cv::Size frame) {
  std::array<cv::Point2d, kLandmarkCount> pts{};
  const double a = 0.5 * p.width;
  const cv::Point2d c = p.center;

  // Static face outline, brows, nose and eyes scaled to the mouth.
  for (int i = 0; i <= 16; ++i) {
    const double ang = std::numbers::pi * (0.05 + 0.9 * i / 16.0);
    pts[i] = {c.x - 1.7 * a * std::cos(ang), c.y - 0.9 * a + 1.25 * a * std::sin(ang)};
  }
  for (int i = 0; i < 5; ++i) {
    pts[17 + i] = {c.x - 1.2 * a + 0.22 * a * i, c.y - 2.0 * a - 0.08 * a * std::sin(i * 0.7)};
    pts[22 + i] = {c.x + 0.32 * a + 0.22 * a * i, c.y - 2.0 * a - 0.08 * a * std::sin((4 - i) * 0.7)};
  }
  for (int i = 0; i < 4; ++i) pts[27 + i] = {c.x, c.y - 1.6 * a + 0.25 * a * i};
  for (int i = 0; i < 5; ++i) pts[31 + i] = {c.x - 0.3 * a + 0.15 * a * i, c.y - 0.6 * a};
  for (int e = 0; e < 2; ++e) {
    const double ex = c.x + (e == 0 ? -0.75 : 0.75) * a;
    const double ey = c.y - 1.75 * a;
    for (int i = 0; i < 6; ++i) {
      const double ang = kTwoPi * i / 6.0;
      pts[36 + 6 * e + i] = {ex - 0.3 * a * std::cos(ang), ey - 0.1 * a * std::sin(ang)};
    }
  }
  for (int i = 0; i < 48; ++i) {
    pts[i].x = std::clamp(pts[i].x, 0.0, frame.width - 1.0);
    pts[i].y = std::clamp(pts[i].y, 0.0, frame.height - 1.0);
  }

  const double w = kTwoPi * p.frequency_hz * t;
  const double open = p.open_amplitude * 0.5 * (1.0 - std::cos(w + p.jaw_phase));
  const double drift = p.secondary_amplitude * std::sin(kTwoPi * p.secondary_hz * t);
  const auto rest = rest_mouth(p);
  for (int k = 0; k < kMouthLandmarkCount; ++k) {
    pts[kMouthFirstLandmark + k] = {
        rest[k].x + p.gain_x[k] * std::sin(w + p.phase_x[k]),
        rest[k].y + kJawShare[k] * open + p.gain_y[k] * std::sin(w + p.phase_y[k]) + drift};
  }
  // Keep the inner lips from crossing.
  for (int k : {13, 14, 15}) {
    const int below = 32 - k;  // 19, 18, 17
    auto& up = pts[kMouthFirstLandmark + k];
    auto& lo = pts[kMouthFirstLandmark + below];
    if (lo.y < up.y) lo.y = up.y = 0.5 * (lo.y + up.y);
  }
  return pts;
}

cv::Mat3b render_frame(const SubjectParams& p, const std::array<cv::Point2d, kLandmarkCount>& pts,
                       cv::Size frame, Rng& noise) {
  cv::Mat3b img(frame);
  for (int r = 0; r < frame.height; ++r) {
    const double f = 0.92 + 0.12 * r / frame.height;
    img.row(r).setTo(scaled(p.skin_bgr, f));
  }

  LandmarkFrame lf;
  lf.points = pts;
  const MouthLandmarks mouth = ingest::extract_mouth(lf);
  const LipContour contour = geometry::fit_contour(mouth);
  constexpr int kShift = 4;
  const auto outer = fixed_point(contour.outer_polyline(), kShift);
  const auto inner = fixed_point(contour.inner_polyline(), kShift);
  cv::fillPoly(img, std::vector<std::vector<cv::Point>>{outer}, scaled(p.lip_bgr, 1.0),
               cv::LINE_AA, kShift);
  cv::fillPoly(img, std::vector<std::vector<cv::Point>>{inner}, cv::Scalar(55, 40, 60),
               cv::LINE_AA, kShift);

  for (const auto& g : p.grooves) {
    std::vector<cv::Point2d> line;
    constexpr int kSteps = 6;
    for (int i = 0; i <= kSteps; ++i) {
      const double s = static_cast<double>(i) / kSteps;
      const double u = g.u_outer + (g.u_inner - g.u_outer) * s;
      const double v = g.v_start + (g.v_end - g.v_start) * s;
      const cv::Point2d out_pt = g.upper ? contour.outer[0].eval(u) : contour.outer[1].eval(1.0 - u);
      const cv::Point2d in_pt = g.upper ? contour.inner[0].eval(u) : contour.inner[1].eval(1.0 - u);
      line.push_back(lerp(out_pt, in_pt, v));
    }
    cv::polylines(img, std::vector<std::vector<cv::Point>>{fixed_point(line, kShift)}, false,
                  scaled(p.lip_bgr, g.darkness), g.thickness, cv::LINE_AA, kShift);
  }

  // Sensor noise, identical across channels.
  cv::Mat1f n(frame);
  cv::RNG cv_rng(noise.bits());
  cv_rng.fill(n, cv::RNG::NORMAL, 0.0, p.pixel_noise);
  for (int r = 0; r < frame.height; ++r) {
    auto* px = img.ptr<cv::Vec3b>(r);
    const float* nz = n.ptr<float>(r);
    for (int col = 0; col < frame.width; ++col) {
      for (int ch = 0; ch < 3; ++ch) px[col][ch] = cv::saturate_cast<uchar>(px[col][ch] + nz[col]);
    }
  }
  return img;
}

void write_subject(const std::filesystem::path& dir, const std::string& id,
                   const SubjectParams& params, const SynthOptions& options,
                   std::uint64_t noise_seed) {
  const auto subject_dir = dir / id;
  std::filesystem::create_directories(subject_dir / "frames");
  Rng noise(noise_seed);
  const cv::Size frame(options.width, options.height);
  const int n = frame_count(options);
  std::vector<LandmarkFrame> records;
  records.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = i / options.fps;
    const auto truth = landmarks_at(params, t, frame);
    const cv::Mat3b img = render_frame(params, truth, frame, noise);
    char name[32];
    std::snprintf(name, sizeof name, "frames/%06d.png", i);
    if (!cv::imwrite((subject_dir / name).string(), img)) {
      throw Error(ErrorCode::IoFailure, "cannot write " + (subject_dir / name).string());
    }
    LandmarkFrame rec;
    rec.frame_index = static_cast<std::uint64_t>(i);
    rec.timestamp_ms = 1000.0 * t;
    rec.image_ref = name;
    for (int k = 0; k < kLandmarkCount; ++k) {
      const double jx = noise.normal(0.0, options.landmark_jitter);
      const double jy = noise.normal(0.0, options.landmark_jitter);
      rec.points[k] = {std::clamp(truth[k].x + jx, 0.0, options.width - 1.0),
                       std::clamp(truth[k].y + jy, 0.0, options.height - 1.0)};
    }
    records.push_back(rec);
  }
  ingest::write_landmark_file(subject_dir / "landmarks.lmk.jsonl", records);
}

std::vector<DatasetEntry> generate(const std::filesystem::path& dir, const SynthOptions& options) {
  validate(options);
  std::filesystem::create_directories(dir);
  Rng master(options.seed);
  std::vector<DatasetEntry> entries;
  const int digits = options.subjects >= 100 ? 3 : 2;
  for (int s = 0; s < options.subjects; ++s) {
    Rng param_rng(master.bits());
    const std::uint64_t noise_seed = master.bits();
    char id[16];
    std::snprintf(id, sizeof id, "s%0*d", digits, s + 1);
    write_subject(dir, id, sample_subject(param_rng), options, noise_seed);
    entries.push_back({id, std::filesystem::path(id) / "landmarks.lmk.jsonl"});
  }
  std::ofstream manifest(dir / "manifest.txt", std::ios::trunc);
  if (!manifest) throw Error(ErrorCode::IoFailure, "cannot write manifest in " + dir.string());
  for (const auto& e : entries) manifest << e.subject << '\t' << e.landmarks.generic_string() << '\n';
  return entries;
}

std::vector<DatasetEntry> read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.txt");
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + (dir / "manifest.txt").string());
  std::vector<DatasetEntry> entries;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw Error(ErrorCode::MalformedRecord, "manifest line needs subject<TAB>path", no);
    }
    entries.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  if (entries.empty()) throw Error(ErrorCode::EmptyInput, "manifest lists no subjects");
  return entries;
}

}  // namespace lipdyn::synth
