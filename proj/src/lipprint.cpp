#include "lipdyn/lipprint.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include <opencv2/imgproc.hpp>

#include "lipdyn/error.hpp"

namespace lipdyn::lipprint {

namespace {
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
}

double LineSegment::angle() const {
  double a = std::atan2(p2.y - p1.y, p2.x - p1.x) * kRadToDeg;
  a = std::fmod(a, 180.0);
  if (a < 0.0) a += 180.0;
  if (a >= 180.0) a -= 180.0;
  return a;
}

double angle_difference(double a_deg, double b_deg) {
  double d = std::fmod(std::abs(a_deg - b_deg), 180.0);
  return std::min(d, 180.0 - d);
}

cv::Mat1b preprocess_lipprint(const LipRoi& roi, const PreprocessOptions& options) {
  if (cv::countNonZero(roi.mask) == 0) throw Error(ErrorCode::EmptyMask, "lip mask is empty");

  cv::Mat1b enhanced;
  auto clahe = cv::createCLAHE(options.clahe_clip,
                               cv::Size(options.clahe_tiles, options.clahe_tiles));
  clahe->apply(roi.gray, enhanced);

  cv::Mat1b edges;
  cv::Canny(enhanced, edges, options.canny_low, options.canny_high, options.canny_aperture);

  cv::Mat1b smoothed;
  cv::bilateralFilter(edges, smoothed, options.bilateral_diameter,
                      options.bilateral_sigma_color, options.bilateral_sigma_space);

  cv::Mat1b gate = roi.mask;
  if (options.mask_erode > 0) {
    cv::erode(roi.mask, gate, cv::Mat(), cv::Point(-1, -1), options.mask_erode,
              cv::BORDER_CONSTANT, cv::Scalar(0));
  }

  cv::Mat1b out(smoothed.size(), 0);
  for (int r = 0; r < out.rows; ++r) {
    for (int c = 0; c < out.cols; ++c) {
      out(r, c) = (gate(r, c) != 0 && smoothed(r, c) >= 128) ? 1 : 0;
    }
  }
  return out;
}

std::vector<LineSegment> detect_lines(const cv::Mat1b& edges, const texture::SixRegions& regions,
                                      const HoughOptions& options) {
  std::vector<cv::Vec4i> raw;
  cv::HoughLinesP(edges, raw, options.rho, options.theta_deg * std::numbers::pi / 180.0,
                  options.threshold, options.min_length, options.max_gap);
  std::vector<LineSegment> lines;
  lines.reserve(raw.size());
  for (const auto& l : raw) {
    LineSegment s{{static_cast<double>(l[0]), static_cast<double>(l[1])},
                  {static_cast<double>(l[2]), static_cast<double>(l[3])}};
    s.region = regions.locate(s.center());
    lines.push_back(s);
  }
  return lines;
}

std::vector<LineSegment> link_segments(std::vector<LineSegment> lines, double max_gap,
                                       double max_angle_deg) {
  auto gap = [](const LineSegment& a, const LineSegment& b) {
    return std::min({cv::norm(a.p1 - b.p1), cv::norm(a.p1 - b.p2), cv::norm(a.p2 - b.p1),
                     cv::norm(a.p2 - b.p2)});
  };
  while (true) {
    double best_gap = max_gap;
    std::size_t bi = 0, bj = 0;
    bool found = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      for (std::size_t j = i + 1; j < lines.size(); ++j) {
        const double g = gap(lines[i], lines[j]);
        if (g >= max_gap) continue;
        if (angle_difference(lines[i].angle(), lines[j].angle()) > max_angle_deg) continue;
        if (!found || g < best_gap) {
          best_gap = g;
          bi = i;
          bj = j;
          found = true;
        }
      }
    }
    if (!found) break;

    const std::array<cv::Point2d, 4> ends{lines[bi].p1, lines[bi].p2, lines[bj].p1, lines[bj].p2};
    double far = -1.0;
    LineSegment merged = lines[bi];
    for (int a = 0; a < 4; ++a) {
      for (int b = a + 1; b < 4; ++b) {
        const double d = cv::norm(ends[a] - ends[b]);
        if (d > far) {
          far = d;
          merged.p1 = ends[a];
          merged.p2 = ends[b];
        }
      }
    }
    lines[bi] = merged;
    lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return lines;
}

std::vector<LineSegment> filter_lines(std::span<const LineSegment> lines,
                                      const LineFilter& filter) {
  std::vector<LineSegment> out;
  for (const auto& l : lines) {
    const double a = l.angle();
    if (l.length() > filter.min_length && a >= filter.min_angle && a <= filter.max_angle) {
      out.push_back(l);
    }
  }
  return out;
}

void assign_regions(std::span<LineSegment> lines, const texture::SixRegions& regions) {
  for (auto& l : lines) l.region = regions.locate(l.center());
}

std::vector<LineSegment> frame_lines(const LipRoi& roi, const texture::SixRegions& regions,
                                     const PreprocessOptions& pre, const HoughOptions& hough,
                                     const LineFilter& filter) {
  const cv::Mat1b edges = preprocess_lipprint(roi, pre);
  auto lines = filter_lines(link_segments(detect_lines(edges, regions, hough)), filter);
  assign_regions(lines, regions);
  return lines;
}

MotionVectorSet match_motion(std::span<const LineSegment> prev, std::span<const LineSegment> curr,
                             const MatchOptions& options) {
  struct Match {
    double curr_length;
    int region;
    std::size_t order;  // position in the global cost order
    MotionVector v;
  };
  std::vector<Match> matched;

  for (int region = 0; region < texture::kRegionCount; ++region) {
    std::vector<std::size_t> pi, ci;
    for (std::size_t i = 0; i < prev.size(); ++i) {
      if (static_cast<int>(prev[i].region) == region) pi.push_back(i);
    }
    for (std::size_t j = 0; j < curr.size(); ++j) {
      if (static_cast<int>(curr[j].region) == region) ci.push_back(j);
    }

    std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
    for (std::size_t i : pi) {
      for (std::size_t j : ci) {
        const double dist = cv::norm(curr[j].center() - prev[i].center());
        if (dist > options.max_center_distance) continue;
        const double cost = options.w_center * dist +
                            options.w_length * std::abs(curr[j].length() - prev[i].length()) +
                            options.w_angle * angle_difference(curr[j].angle(), prev[i].angle());
        candidates.emplace_back(cost, i, j);
      }
    }
    std::sort(candidates.begin(), candidates.end());

    std::vector<bool> used_prev(prev.size(), false), used_curr(curr.size(), false);
    for (const auto& [cost, i, j] : candidates) {
      if (used_prev[i] || used_curr[j]) continue;
      used_prev[i] = used_curr[j] = true;
      const cv::Point2d d = curr[j].center() - prev[i].center();
      matched.push_back({curr[j].length(), region, matched.size(),
                         {d.x, d.y, static_cast<Region>(region)}});
    }
  }

  // Longest current line per region first, then the globally longest rest.
  auto longer = [](const Match& a, const Match& b) {
    if (a.curr_length != b.curr_length) return a.curr_length > b.curr_length;
    return a.order < b.order;
  };
  std::vector<bool> taken(matched.size(), false);
  MotionVectorSet out;
  for (int region = 0; region < texture::kRegionCount; ++region) {
    std::size_t best = matched.size();
    for (std::size_t k = 0; k < matched.size(); ++k) {
      if (matched[k].region != region) continue;
      if (best == matched.size() || longer(matched[k], matched[best])) best = k;
    }
    if (best < matched.size() && out.vectors.size() < kMaxMotionVectors) {
      taken[best] = true;
      out.vectors.push_back(matched[best].v);
    }
  }
  std::vector<std::size_t> rest;
  for (std::size_t k = 0; k < matched.size(); ++k) {
    if (!taken[k]) rest.push_back(k);
  }
  std::sort(rest.begin(), rest.end(),
            [&](std::size_t a, std::size_t b) { return longer(matched[a], matched[b]); });
  for (std::size_t k : rest) {
    if (out.vectors.size() >= kMaxMotionVectors) break;
    out.vectors.push_back(matched[k].v);
  }

  if (!out.vectors.empty()) {
    const double n = static_cast<double>(out.vectors.size());
    for (const auto& v : out.vectors) {
      out.mean_dx += v.dx;
      out.mean_dy += v.dy;
      out.mean_magnitude += v.magnitude();
    }
    out.mean_dx /= n;
    out.mean_dy /= n;
    out.mean_magnitude /= n;
    out.mean_direction_deg = std::atan2(out.mean_dy, out.mean_dx) * kRadToDeg;
  }
  return out;
}

WindowMotion summarize_motion(std::span<const MotionVectorSet> pairs) {
  WindowMotion w;
  std::array<double, 2 * kMaxMotionVectors> slot_sum{};
  std::array<int, kMaxMotionVectors> slot_count{};
  double sum_dx = 0.0, sum_dy = 0.0, sum_mag = 0.0;
  int present_pairs = 0;
  std::vector<cv::Point2d> means;

  for (const auto& p : pairs) {
    if (p.empty()) continue;
    for (std::size_t s = 0; s < p.vectors.size(); ++s) {
      slot_sum[2 * s] += p.vectors[s].dx;
      slot_sum[2 * s + 1] += p.vectors[s].dy;
      ++slot_count[s];
      if (p.vectors[s].magnitude() > 0.0) w.present = true;
    }
    ++present_pairs;
    sum_dx += p.mean_dx;
    sum_dy += p.mean_dy;
    sum_mag += p.mean_magnitude;
    means.emplace_back(p.mean_dx, p.mean_dy);
  }
  if (!w.present) return w;

  for (int s = 0; s < kMaxMotionVectors; ++s) {
    if (slot_count[s] == 0) continue;
    w.values[2 * s] = slot_sum[2 * s] / slot_count[s];
    w.values[2 * s + 1] = slot_sum[2 * s + 1] / slot_count[s];
  }

  const double mean_dx = sum_dx / present_pairs, mean_dy = sum_dy / present_pairs;
  w.trajectory_length = sum_mag;

  double turn_sum = 0.0;
  int turns = 0;
  for (std::size_t k = 1; k < means.size(); ++k) {
    const cv::Point2d a = means[k - 1], b = means[k];
    if (cv::norm(a) == 0.0 || cv::norm(b) == 0.0) continue;
    turn_sum += std::abs(std::atan2(a.x * b.y - a.y * b.x, a.dot(b)));
    ++turns;
  }
  const double mean_step = sum_mag / present_pairs;
  if (turns > 0 && mean_step > 0.0) w.trajectory_curvature = turn_sum / turns / mean_step;

  constexpr int base = 2 * kMaxMotionVectors;
  w.values[base + 0] = std::hypot(mean_dx, mean_dy);
  w.values[base + 1] = sum_mag / present_pairs;
  w.values[base + 2] = std::atan2(mean_dy, mean_dx) * kRadToDeg;
  w.values[base + 3] = w.trajectory_length;
  w.values[base + 4] = w.trajectory_curvature;
  return w;
}

}  // namespace lipdyn::lipprint
