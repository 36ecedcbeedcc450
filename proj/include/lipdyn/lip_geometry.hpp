#pragma once

#include <span>
#include <vector>

#include <opencv2/core.hpp>

#include "lipdyn/types.hpp"

namespace lipdyn::geometry {

struct FitOptions {
  int degree = 3;
  int reparam_iterations = 8;
};

/// Fits upper/lower outer (48..54, 54..59+48) and upper/lower inner
/// (60..64, 64..67+60) segments. Throws DegenerateGeometry when the outer
/// landmarks enclose no area.
LipContour fit_contour(const MouthLandmarks& mouth, const FitOptions& options = {});

/// Least-squares curve through `points` with both endpoints interpolated.
CurveSegment fit_segment(std::span<const cv::Point2d> points, int degree,
                         int reparam_iterations);

/// Pixel (c, r) is set iff its center (c, r) lies inside or on the polygon.
cv::Mat1b rasterize_polygon(std::span<const cv::Point2d> polygon,
                            cv::Size size = {kRoiWidth, kRoiHeight});
cv::Mat1b rasterize_mask(const LipContour& contour,
                         cv::Size size = {kRoiWidth, kRoiHeight});

struct ChannelStats {
  double mean = 0.0;
  double stddev = 0.0;
};

struct StaticShapeFeatures {
  int area_px = 0;
  double perimeter_px = 0.0;
  std::vector<int> upper_thickness;  // per column
  std::vector<int> lower_thickness;
  double upper_thickness_mean = 0.0;
  double lower_thickness_mean = 0.0;
  double curvature_mean = 0.0;
  double symmetry = 0.0;
  std::array<ChannelStats, 3> color{};  // B, G, R over masked pixels
};

/// Thickness split per column: set pixels with row < midline(col) count as
/// upper, the rest as lower. The midline is the line through the corners.
void column_thickness(const cv::Mat1b& mask, cv::Point2d left_corner,
                      cv::Point2d right_corner, std::vector<int>& upper,
                      std::vector<int>& lower);

/// Ordered 8-connected outer boundary of the largest mask component.
std::vector<cv::Point> trace_boundary(const cv::Mat1b& mask);

/// Sum of boundary step lengths (1 axial, sqrt(2) diagonal).
double boundary_length(std::span<const cv::Point> boundary);

/// Mean absolute turning angle per unit length along the boundary, using
/// chords `offset` points apart.
double boundary_curvature(std::span<const cv::Point> boundary, int offset = 3);

/// Intersection-over-union of the mask and its left-right mirror.
double mirror_symmetry(const cv::Mat1b& mask);

/// Throws EmptyMask when the ROI mask has no set pixels.
StaticShapeFeatures static_features(const LipRoi& roi);

}  // namespace lipdyn::geometry
