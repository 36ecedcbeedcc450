#include "lipdyn/articulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lipdyn/error.hpp"
#include "lipdyn/lip_geometry.hpp"

namespace lipdyn::articulator {

TrajectoryMatrix build_trajectories(std::span<const MouthLandmarks> frames,
                                    const RoiTransform& frame_map) {
  if (frames.size() < 2) {
    throw Error(ErrorCode::WindowTooShort, "trajectory window needs at least 2 frames");
  }
  const int n = static_cast<int>(frames.size());
  TrajectoryMatrix t{cv::Mat1d(kMouthLandmarkCount, n), cv::Mat1d(kMouthLandmarkCount, n)};
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < kMouthLandmarkCount; ++i) {
      const cv::Point2d p = frame_map.apply(frames[k].points[i]);
      t.x(i, k) = p.x;
      t.y(i, k) = p.y;
    }
  }
  return t;
}

cv::Mat1d row_correlation(const cv::Mat1d& rows) {
  const int m = rows.rows, n = rows.cols;
  cv::Mat1d centered(m, n);
  std::vector<double> norm(m, 0.0);
  std::vector<bool> constant(m, true);
  for (int i = 0; i < m; ++i) {
    double mean = 0.0;
    for (int k = 0; k < n; ++k) {
      mean += rows(i, k);
      if (rows(i, k) != rows(i, 0)) constant[i] = false;
    }
    mean /= n;
    double ss = 0.0;
    for (int k = 0; k < n; ++k) {
      centered(i, k) = rows(i, k) - mean;
      ss += centered(i, k) * centered(i, k);
    }
    norm[i] = std::sqrt(ss);
    if (!(norm[i] > 0.0)) constant[i] = true;
  }

  cv::Mat1d r(m, m, 0.0);
  for (int i = 0; i < m; ++i) {
    if (constant[i]) continue;
    r(i, i) = 1.0;
    for (int j = i + 1; j < m; ++j) {
      if (constant[j]) continue;
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += centered(i, k) * centered(j, k);
      r(i, j) = r(j, i) = s / (norm[i] * norm[j]);
    }
  }
  return r;
}

CorrelationFeatures correlation_matrix(const TrajectoryMatrix& traj) {
  if (traj.frames() < 2) {
    throw Error(ErrorCode::WindowTooShort, "correlation needs at least 2 frames");
  }
  return {row_correlation(traj.x), row_correlation(traj.y)};
}

std::string_view openness_name(Openness o) {
  switch (o) {
    case Openness::Small: return "small";
    case Openness::Medium: return "medium";
    case Openness::Large: return "large";
  }
  return "?";
}

namespace {

std::vector<cv::Point2d> sample_sorted(const CurveSegment& seg, int samples) {
  std::vector<cv::Point2d> pts;
  for (int i = 0; i <= samples; ++i) pts.push_back(seg.eval(static_cast<double>(i) / samples));
  std::sort(pts.begin(), pts.end(),
            [](const cv::Point2d& a, const cv::Point2d& b) { return a.x < b.x; });
  return pts;
}

double interp_y(const std::vector<cv::Point2d>& pts, double x) {
  auto it = std::lower_bound(pts.begin(), pts.end(), x,
                             [](const cv::Point2d& p, double v) { return p.x < v; });
  if (it == pts.begin()) return it->y;
  if (it == pts.end()) return pts.back().y;
  const cv::Point2d b = *it, a = *(it - 1);
  if (b.x == a.x) return std::max(a.y, b.y);
  return a.y + (x - a.x) * (b.y - a.y) / (b.x - a.x);
}

}  // namespace

double mouth_height(const MouthLandmarks& mouth) {
  constexpr std::array<int, 5> upper_run{12, 13, 14, 15, 16};
  constexpr std::array<int, 5> lower_run{16, 17, 18, 19, 12};
  std::array<cv::Point2d, 5> up, lo;
  for (int i = 0; i < 5; ++i) {
    up[i] = mouth.points[upper_run[i]];
    lo[i] = mouth.points[lower_run[i]];
  }
  const geometry::FitOptions fit;
  const auto upper = sample_sorted(geometry::fit_segment(up, fit.degree, fit.reparam_iterations), 64);
  const auto lower = sample_sorted(geometry::fit_segment(lo, fit.degree, fit.reparam_iterations), 64);

  const double x0 = std::max(upper.front().x, lower.front().x);
  const double x1 = std::min(upper.back().x, lower.back().x);
  double height = 0.0;
  constexpr int columns = 64;
  for (int c = 0; c <= columns && x1 >= x0; ++c) {
    const double x = x0 + (x1 - x0) * c / columns;
    height = std::max(height, interp_y(lower, x) - interp_y(upper, x));
  }
  return height;
}

// Inner gaps below this many pixels are rounding noise of touching lips.
constexpr double kClosedGap = 1e-6;

OpennessSeries openness(std::span<const MouthLandmarks> frames, double t1, double t2) {
  if (frames.empty()) throw Error(ErrorCode::EmptyInput, "openness needs at least one frame");
  if (!(0.0 < t1 && t1 < t2 && t2 < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "openness thresholds must satisfy 0 < t1 < t2 < 1");
  }
  OpennessSeries s;
  double peak = 0.0;
  for (const auto& f : frames) {
    const double h = mouth_height(f);
    s.height.push_back(h < kClosedGap ? 0.0 : h);
    peak = std::max(peak, s.height.back());
  }
  std::array<int, 3> counts{};
  for (double h : s.height) {
    const double norm = peak > 0.0 ? h / peak : 0.0;
    const Openness level = norm < t1 ? Openness::Small : norm < t2 ? Openness::Medium : Openness::Large;
    s.level.push_back(level);
    ++counts[static_cast<int>(level)];
  }
  for (int k = 0; k < 3; ++k) s.histogram[k] = static_cast<double>(counts[k]) / frames.size();
  return s;
}

const std::vector<PhonemeEntry>& phoneme_table() {
  static const std::vector<PhonemeEntry> table{
      {"I", "ɪ", Openness::Small},
      {"i:", "iː", Openness::Small},
      {"I@", "ɪə", Openness::Small},
      {"U", "ʊ", Openness::Small},
      {"u:", "uː", Openness::Small},
      {"U@", "ʊə", Openness::Small},
      {"ae", "æ", Openness::Medium},
      {"e", "e", Openness::Medium},
      {"@", "ə", Openness::Medium},
      {"3:", "ɜː", Openness::Medium},
      {"2", "ʌ", Openness::Medium},
      {"eI", "eɪ", Openness::Medium},
      {"OI", "ɔɪ", Openness::Medium},
      {"@U", "əʊ", Openness::Medium},
      {"e@", "eə", Openness::Medium},
      {"O:", "ɔː", Openness::Large},
      {"6", "ɒ", Openness::Large},
      {"A:", "ɑː", Openness::Large},
      {"aI", "aɪ", Openness::Large},
      {"aU", "aʊ", Openness::Large},
  };
  return table;
}

std::vector<PhonemeEntry> load_phoneme_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<PhonemeEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string symbol, ipa, level;
    if (!std::getline(fields, symbol, '\t') || !std::getline(fields, ipa, '\t') ||
        !std::getline(fields, level)) {
      throw Error(ErrorCode::MalformedRecord, "expected 3 tab-separated fields", lineno);
    }
    Openness o;
    if (level == "small") {
      o = Openness::Small;
    } else if (level == "medium") {
      o = Openness::Medium;
    } else if (level == "large") {
      o = Openness::Large;
    } else {
      throw Error(ErrorCode::MalformedRecord, "unknown level " + level, lineno);
    }
    out.push_back({symbol, ipa, o});
  }
  return out;
}

Openness phoneme_category(std::string_view phoneme) {
  if (phoneme.size() >= 2 && phoneme.front() == '/' && phoneme.back() == '/') {
    phoneme = phoneme.substr(1, phoneme.size() - 2);
  }
  for (const auto& e : phoneme_table()) {
    if (e.symbol == phoneme || e.ipa == phoneme) return e.level;
  }
  throw Error(ErrorCode::UnknownPhoneme, "unknown phoneme " + std::string(phoneme));
}

std::array<double, kArticulatorBlockSize> articulator_block(const CorrelationFeatures& corr,
                                                           const OpennessSeries& open) {
  std::array<double, kArticulatorBlockSize> out{};
  int k = 0;
  for (const cv::Mat1d* m : {&corr.rx, &corr.ry}) {
    for (int i = 0; i < kMouthLandmarkCount; ++i) {
      for (int j = i + 1; j < kMouthLandmarkCount; ++j) out[k++] = (*m)(i, j);
    }
  }
  for (double h : open.histogram) out[k++] = h;
  return out;
}

}  // namespace lipdyn::articulator
