#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

namespace lipdyn {

inline constexpr int kLandmarkCount = 68;
inline constexpr int kMouthFirstLandmark = 48;
inline constexpr int kMouthLandmarkCount = 20;

inline constexpr int kRoiWidth = 250;
inline constexpr int kRoiHeight = 110;
inline constexpr int kRoiPixels = kRoiWidth * kRoiHeight;

// Mouth-relative landmark indices (source index minus 48), iBUG-68 layout.
namespace mouth {
inline constexpr int kLeftCorner = 0;    // 48
inline constexpr int kRightCorner = 6;   // 54
inline constexpr int kInnerLeft = 12;    // 60
inline constexpr int kInnerRight = 16;   // 64
}  // namespace mouth

/// One video frame's facial landmarks. Pixel coordinates, y grows downward.
struct LandmarkFrame {
  std::uint64_t frame_index = 0;
  double timestamp_ms = 0.0;
  std::array<cv::Point2d, kLandmarkCount> points{};
  std::optional<std::string> image_ref;

  bool operator==(const LandmarkFrame&) const = default;
};

/// Landmarks 48..67; entry k is source landmark 48 + k.
struct MouthLandmarks {
  std::array<cv::Point2d, kMouthLandmarkCount> points{};
};

/// Parametric polynomial curve: x(t) = sum coeff_x[k] t^k, same for y,
/// over t in [0, 1]. Endpoints coincide with the landmarks it joins.
struct CurveSegment {
  std::vector<double> coeff_x;
  std::vector<double> coeff_y;
  int first_landmark = -1;
  int last_landmark = -1;

  cv::Point2d eval(double t) const;
  cv::Point2d derivative(double t) const;
  cv::Point2d start() const { return eval(0.0); }
  cv::Point2d end() const { return eval(1.0); }
};

/// Closed outer and inner lip loops, each a chain of curve segments.
struct LipContour {
  std::vector<CurveSegment> outer;
  std::vector<CurveSegment> inner;
  cv::Point2d left_corner;
  cv::Point2d right_corner;

  /// Closed polyline through the outer loop, `samples` points per segment,
  /// without repeating the closing vertex.
  std::vector<cv::Point2d> outer_polyline(int samples = 32) const;
  std::vector<cv::Point2d> inner_polyline(int samples = 32) const;
};

/// Axis-aligned affine map from source pixels to ROI pixels.
struct RoiTransform {
  double scale_x = 1.0;
  double scale_y = 1.0;
  double offset_x = 0.0;  // source x mapped to ROI x = 0
  double offset_y = 0.0;

  cv::Point2d apply(cv::Point2d p) const {
    return {(p.x - offset_x) * scale_x, (p.y - offset_y) * scale_y};
  }
  cv::Point2d invert(cv::Point2d q) const {
    return {q.x / scale_x + offset_x, q.y / scale_y + offset_y};
  }
  CurveSegment apply(const CurveSegment& seg) const;
  LipContour apply(const LipContour& contour) const;
};

/// Cropped, resized 250x110 lip region.
struct LipRoi {
  cv::Mat1b gray;
  cv::Mat1b mask;  // 1 = lip, 0 = background
  cv::Mat3b color;
  RoiTransform transform;
  LipContour contour;  // ROI coordinates
};

}  // namespace lipdyn
