#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include <opencv2/core.hpp>

#include "lipdyn/texture.hpp"
#include "lipdyn/types.hpp"

namespace lipdyn::lipprint {

using texture::Region;

/// A lip-print line in ROI pixels. Angles are measured from +x in image axes
/// (y down) and normalized to [0, 180).
struct LineSegment {
  cv::Point2d p1;
  cv::Point2d p2;
  Region region = Region::UL;

  double length() const { return cv::norm(p2 - p1); }
  double angle() const;
  cv::Point2d center() const { return (p1 + p2) * 0.5; }
};

struct PreprocessOptions {
  double clahe_clip = 2.0;
  int clahe_tiles = 8;
  double canny_low = 50.0;
  double canny_high = 150.0;
  int canny_aperture = 3;
  int bilateral_diameter = 5;
  double bilateral_sigma_color = 75.0;
  double bilateral_sigma_space = 75.0;
  int mask_erode = 2;  // erosion iterations applied to the gating mask
};

/// Gray -> CLAHE -> Canny -> bilateral -> keep lip pixels. Returns a 0/1
/// raster. Throws EmptyMask.
cv::Mat1b preprocess_lipprint(const LipRoi& roi, const PreprocessOptions& options = {});

struct HoughOptions {
  double rho = 1.0;
  double theta_deg = 1.0;
  int threshold = 10;
  double min_length = 5.0;
  double max_gap = 2.0;
};

/// Probabilistic Hough segments on a 0/1 edge raster, labeled by region.
std::vector<LineSegment> detect_lines(const cv::Mat1b& edges, const texture::SixRegions& regions,
                                      const HoughOptions& options = {});

/// Smallest absolute difference between two line angles, in [0, 90].
double angle_difference(double a_deg, double b_deg);

/// Repeatedly merges the pair with the smallest nearest-endpoint gap that is
/// below `max_gap` and within `max_angle_deg`; ties go to the lower index
/// pair. The merged segment spans the two farthest endpoints and keeps the
/// lower-index segment's slot and label.
std::vector<LineSegment> link_segments(std::vector<LineSegment> lines, double max_gap = 2.0,
                                       double max_angle_deg = 10.0);

struct LineFilter {
  double min_length = 10.0;  // exclusive
  double min_angle = 40.0;   // inclusive
  double max_angle = 140.0;  // inclusive
};

std::vector<LineSegment> filter_lines(std::span<const LineSegment> lines,
                                      const LineFilter& filter = {});

void assign_regions(std::span<LineSegment> lines, const texture::SixRegions& regions);

/// Full per-frame line extraction: preprocess, detect, link, filter, label.
std::vector<LineSegment> frame_lines(const LipRoi& roi, const texture::SixRegions& regions,
                                     const PreprocessOptions& pre = {},
                                     const HoughOptions& hough = {},
                                     const LineFilter& filter = {});

// --- Motion between frames ---------------------------------------------------

inline constexpr int kMaxMotionVectors = 8;

struct MotionVector {
  double dx = 0.0;
  double dy = 0.0;
  Region region = Region::UL;
  double magnitude() const { return std::hypot(dx, dy); }
};

struct MatchOptions {
  double w_center = 1.0;  // per px
  double w_length = 0.5;  // per px
  double w_angle = 0.2;   // per degree
  double max_center_distance = 15.0;
};

/// Motion between one frame pair. `vectors` holds the regional primaries in
/// region order followed by the padding vectors, at most eight.
struct MotionVectorSet {
  std::vector<MotionVector> vectors;
  double mean_dx = 0.0;
  double mean_dy = 0.0;
  double mean_magnitude = 0.0;
  double mean_direction_deg = 0.0;

  bool empty() const { return vectors.empty(); }
};

MotionVectorSet match_motion(std::span<const LineSegment> prev, std::span<const LineSegment> curr,
                             const MatchOptions& options = {});

/// Window-level lip-print dynamics: 8 slot-averaged vectors (16 values)
/// followed by |mean vector|, mean magnitude, mean direction, trajectory
/// length and trajectory curvature.
inline constexpr int kMotionBlockSize = 2 * kMaxMotionVectors + 5;

struct WindowMotion {
  std::array<double, kMotionBlockSize> values{};
  double trajectory_length = 0.0;
  double trajectory_curvature = 0.0;
  bool present = false;  // false when no frame pair showed any motion
};

WindowMotion summarize_motion(std::span<const MotionVectorSet> pairs);

}  // namespace lipdyn::lipprint
