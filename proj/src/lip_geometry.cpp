#include "lipdyn/lip_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <opencv2/imgproc.hpp>

#include "lipdyn/error.hpp"

namespace lipdyn::geometry {

namespace {

// Mouth-relative landmark runs for the four lip curves.
constexpr std::array<int, 7> kOuterUpper{0, 1, 2, 3, 4, 5, 6};
constexpr std::array<int, 7> kOuterLower{6, 7, 8, 9, 10, 11, 0};
constexpr std::array<int, 5> kInnerUpper{12, 13, 14, 15, 16};
constexpr std::array<int, 5> kInnerLower{16, 17, 18, 19, 12};

// Constrained basis: p(t) = P0 (1 - t) + P1 t + sum_k c_k t^(k+1) (1 - t).
double bubble(double t, int k) { return std::pow(t, k + 1) * (1.0 - t); }

double shoelace(std::span<const cv::Point2d> poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

template <std::size_t N>
CurveSegment fit_run(const MouthLandmarks& mouth, const std::array<int, N>& run,
                     const FitOptions& options) {
  std::array<cv::Point2d, N> pts;
  for (std::size_t i = 0; i < N; ++i) pts[i] = mouth.points[run[i]];
  CurveSegment seg = fit_segment(pts, options.degree, options.reparam_iterations);
  seg.first_landmark = kMouthFirstLandmark + run.front();
  seg.last_landmark = kMouthFirstLandmark + run.back();
  return seg;
}

}  // namespace

CurveSegment fit_segment(std::span<const cv::Point2d> points, int degree,
                         int reparam_iterations) {
  const int n = static_cast<int>(points.size());
  if (n < 2) throw Error(ErrorCode::DegenerateGeometry, "segment needs two points");
  const cv::Point2d p0 = points.front();
  const cv::Point2d p1 = points.back();
  const int deg = std::clamp(degree, 1, n - 1);
  const int free = deg - 1;

  // Centripetal parameters; uniform when every point coincides.
  std::vector<double> t(n, 0.0);
  for (int i = 1; i < n; ++i) {
    t[i] = t[i - 1] + std::sqrt(cv::norm(points[i] - points[i - 1]));
  }
  if (t.back() > 0.0) {
    for (double& v : t) v /= t.back();
  } else {
    for (int i = 0; i < n; ++i) t[i] = static_cast<double>(i) / (n - 1);
  }
  t.back() = 1.0;

  Eigen::MatrixXd cx = Eigen::MatrixXd::Zero(std::max(free, 0), 1);
  Eigen::MatrixXd cy = cx;

  auto eval = [&](double s) {
    cv::Point2d p = p0 * (1.0 - s) + p1 * s;
    for (int k = 0; k < free; ++k) {
      const double b = bubble(s, k);
      p.x += cx(k) * b;
      p.y += cy(k) * b;
    }
    return p;
  };

  for (int iter = 0; free > 0 && iter <= reparam_iterations; ++iter) {
    const int m = n - 2;
    Eigen::MatrixXd a(m, free);
    Eigen::MatrixXd rhs(m, 2);
    for (int i = 0; i < m; ++i) {
      const double s = t[i + 1];
      for (int k = 0; k < free; ++k) a(i, k) = bubble(s, k);
      const cv::Point2d base = p0 * (1.0 - s) + p1 * s;
      rhs(i, 0) = points[i + 1].x - base.x;
      rhs(i, 1) = points[i + 1].y - base.y;
    }
    const Eigen::MatrixXd sol = a.colPivHouseholderQr().solve(rhs);
    cx = sol.col(0);
    cy = sol.col(1);
    if (iter == reparam_iterations) break;

    // Move each interior parameter to its closest point on the curve.
    for (int i = 1; i < n - 1; ++i) {
      double s = t[i];
      for (int step = 0; step < 3; ++step) {
        cv::Point2d d1 = p1 - p0, d2(0.0, 0.0);
        for (int k = 0; k < free; ++k) {
          const double b1 = (k + 1) * std::pow(s, k) - (k + 2) * std::pow(s, k + 1);
          const double b2 = (k + 1) * k * (k > 0 ? std::pow(s, k - 1) : 0.0) -
                            (k + 2) * (k + 1) * std::pow(s, k);
          d1 += cv::Point2d(cx(k), cy(k)) * b1;
          d2 += cv::Point2d(cx(k), cy(k)) * b2;
        }
        const cv::Point2d r = eval(s) - points[i];
        const double g = r.dot(d1);
        const double hess = d1.dot(d1) + r.dot(d2);
        if (!(hess > 0.0)) break;
        s = std::clamp(s - g / hess, 0.0, 1.0);
      }
      t[i] = s;
    }
  }

  // Expand to the power basis.
  CurveSegment seg;
  seg.coeff_x.assign(deg + 1, 0.0);
  seg.coeff_y.assign(deg + 1, 0.0);
  seg.coeff_x[0] = p0.x;
  seg.coeff_y[0] = p0.y;
  seg.coeff_x[1] = p1.x - p0.x;
  seg.coeff_y[1] = p1.y - p0.y;
  for (int k = 0; k < free; ++k) {
    seg.coeff_x[k + 1] += cx(k);
    seg.coeff_y[k + 1] += cy(k);
    seg.coeff_x[k + 2] -= cx(k);
    seg.coeff_y[k + 2] -= cy(k);
  }
  return seg;
}

LipContour fit_contour(const MouthLandmarks& mouth, const FitOptions& options) {
  std::array<cv::Point2d, 12> outer;
  std::copy_n(mouth.points.begin(), 12, outer.begin());
  double extent = 0.0;
  for (const auto& p : outer) extent = std::max(extent, cv::norm(p - outer[0]));
  const double area = std::abs(shoelace(outer));
  if (!(extent > 0.0) || area <= 1e-9 * extent * extent) {
    throw Error(ErrorCode::DegenerateGeometry, "outer lip landmarks enclose no area");
  }
  if (cv::norm(mouth.points[mouth::kLeftCorner] - mouth.points[mouth::kRightCorner]) <= 0.0) {
    throw Error(ErrorCode::DegenerateGeometry, "mouth corners coincide");
  }

  LipContour c;
  c.outer.push_back(fit_run(mouth, kOuterUpper, options));
  c.outer.push_back(fit_run(mouth, kOuterLower, options));
  c.inner.push_back(fit_run(mouth, kInnerUpper, options));
  c.inner.push_back(fit_run(mouth, kInnerLower, options));
  c.left_corner = mouth.points[mouth::kLeftCorner];
  c.right_corner = mouth.points[mouth::kRightCorner];
  return c;
}

cv::Mat1b rasterize_polygon(std::span<const cv::Point2d> polygon, cv::Size size) {
  cv::Mat1b mask(size, 0);
  const std::size_t n = polygon.size();
  if (n < 2) return mask;
  const int w = size.width, h = size.height;

  // Interior: even-odd crossings on each pixel-center row, half-open in y.
  std::vector<double> xs;
  for (int r = 0; r < h; ++r) {
    xs.clear();
    const double y = r;
    for (std::size_t i = 0; i < n; ++i) {
      const cv::Point2d& a = polygon[i];
      const cv::Point2d& b = polygon[(i + 1) % n];
      if ((a.y <= y && y < b.y) || (b.y <= y && y < a.y)) {
        xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int c0 = std::max(0, static_cast<int>(std::ceil(xs[k])));
      const int c1 = std::min(w - 1, static_cast<int>(std::floor(xs[k + 1])));
      for (int c = c0; c <= c1; ++c) mask(r, c) = 1;
    }
  }

  // Boundary: pixel centers lying exactly on an edge.
  constexpr double eps = 1e-9;
  for (std::size_t i = 0; i < n; ++i) {
    const cv::Point2d& a = polygon[i];
    const cv::Point2d& b = polygon[(i + 1) % n];
    const int r0 = std::max(0, static_cast<int>(std::ceil(std::min(a.y, b.y) - eps)));
    const int r1 = std::min(h - 1, static_cast<int>(std::floor(std::max(a.y, b.y) + eps)));
    for (int r = r0; r <= r1; ++r) {
      if (std::abs(b.y - a.y) <= eps) {
        if (std::abs(r - a.y) > eps) continue;
        const int c0 = std::max(0, static_cast<int>(std::ceil(std::min(a.x, b.x) - eps)));
        const int c1 = std::min(w - 1, static_cast<int>(std::floor(std::max(a.x, b.x) + eps)));
        for (int c = c0; c <= c1; ++c) mask(r, c) = 1;
      } else {
        const double x = a.x + (r - a.y) * (b.x - a.x) / (b.y - a.y);
        const double xr = std::round(x);
        if (std::abs(x - xr) <= eps && xr >= 0 && xr < w) mask(r, static_cast<int>(xr)) = 1;
      }
    }
  }
  return mask;
}

cv::Mat1b rasterize_mask(const LipContour& contour, cv::Size size) {
  const auto poly = contour.outer_polyline(32);
  return rasterize_polygon(poly, size);
}

void column_thickness(const cv::Mat1b& mask, cv::Point2d left_corner,
                      cv::Point2d right_corner, std::vector<int>& upper,
                      std::vector<int>& lower) {
  upper.assign(mask.cols, 0);
  lower.assign(mask.cols, 0);
  const double dx = right_corner.x - left_corner.x;
  for (int c = 0; c < mask.cols; ++c) {
    double mid = 0.5 * (left_corner.y + right_corner.y);
    if (std::abs(dx) > 1e-12) {
      mid = left_corner.y + (c - left_corner.x) * (right_corner.y - left_corner.y) / dx;
    }
    for (int r = 0; r < mask.rows; ++r) {
      if (!mask(r, c)) continue;
      if (r < mid) {
        ++upper[c];
      } else {
        ++lower[c];
      }
    }
  }
}

std::vector<cv::Point> trace_boundary(const cv::Mat1b& mask) {
  cv::Mat1b work = mask.clone();
  std::vector<std::vector<cv::Point>> contours;
  cv::findContours(work, contours, cv::RETR_EXTERNAL, cv::CHAIN_APPROX_NONE);
  if (contours.empty()) return {};
  auto best = std::max_element(contours.begin(), contours.end(),
                               [](const auto& a, const auto& b) {
                                 return std::abs(cv::contourArea(a)) <
                                        std::abs(cv::contourArea(b));
                               });
  return *best;
}

double boundary_length(std::span<const cv::Point> boundary) {
  if (boundary.size() < 2) return 0.0;
  double len = 0.0;
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    const cv::Point d = boundary[(i + 1) % boundary.size()] - boundary[i];
    len += (d.x != 0 && d.y != 0) ? std::numbers::sqrt2 : 1.0;
  }
  return len;
}

double boundary_curvature(std::span<const cv::Point> boundary, int offset) {
  const int n = static_cast<int>(boundary.size());
  if (n < 2 * offset + 1) return 0.0;
  const double step = boundary_length(boundary) / n;
  if (!(step > 0.0)) return 0.0;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const cv::Point2d prev = boundary[(i - offset + n) % n];
    const cv::Point2d cur = boundary[i];
    const cv::Point2d next = boundary[(i + offset) % n];
    const cv::Point2d a = cur - prev, b = next - cur;
    total += std::abs(std::atan2(a.x * b.y - a.y * b.x, a.dot(b)));
  }
  return total / n / (offset * step);
}

double mirror_symmetry(const cv::Mat1b& mask) {
  cv::Mat1b flipped;
  cv::flip(mask, flipped, 1);
  int inter = 0, uni = 0;
  for (int r = 0; r < mask.rows; ++r) {
    for (int c = 0; c < mask.cols; ++c) {
      const bool a = mask(r, c) != 0, b = flipped(r, c) != 0;
      inter += a && b;
      uni += a || b;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

StaticShapeFeatures static_features(const LipRoi& roi) {
  StaticShapeFeatures f;
  f.area_px = cv::countNonZero(roi.mask);
  if (f.area_px == 0) throw Error(ErrorCode::EmptyMask, "lip mask is empty");

  const auto boundary = trace_boundary(roi.mask);
  f.perimeter_px = boundary_length(boundary);
  f.curvature_mean = boundary_curvature(boundary);
  f.symmetry = mirror_symmetry(roi.mask);

  column_thickness(roi.mask, roi.contour.left_corner, roi.contour.right_corner,
                   f.upper_thickness, f.lower_thickness);
  int columns = 0;
  double up = 0.0, lo = 0.0;
  for (int c = 0; c < roi.mask.cols; ++c) {
    if (f.upper_thickness[c] + f.lower_thickness[c] == 0) continue;
    ++columns;
    up += f.upper_thickness[c];
    lo += f.lower_thickness[c];
  }
  f.upper_thickness_mean = up / columns;
  f.lower_thickness_mean = lo / columns;

  cv::Scalar mean, stddev;
  cv::meanStdDev(roi.color, mean, stddev, roi.mask);
  for (int ch = 0; ch < 3; ++ch) f.color[ch] = {mean[ch], stddev[ch]};
  return f;
}

}  // namespace lipdyn::geometry
