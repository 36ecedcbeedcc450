#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lipdyn/error.hpp"
#include "lipdyn/lip_geometry.hpp"
#include "oracles.hpp"

using namespace lipdyn;

namespace {

MouthLandmarks ellipse_mouth(cv::Point2d c, double a, double b, double ia, double ib) {
  MouthLandmarks m;
  for (int k = 0; k < 12; ++k) {
    const double t = std::numbers::pi - k * std::numbers::pi / 6.0;
    m.points[k] = {c.x + a * std::cos(t), c.y - b * std::sin(t)};
  }
  for (int k = 0; k < 8; ++k) {
    const double t = std::numbers::pi - k * std::numbers::pi / 4.0;
    m.points[12 + k] = {c.x + ia * std::cos(t), c.y - ib * std::sin(t)};
  }
  return m;
}

double distance_to_curve(const std::vector<CurveSegment>& segs, cv::Point2d p) {
  double best = 1e300;
  for (const auto& s : segs) {
    for (int i = 0; i <= 2000; ++i) best = std::min(best, cv::norm(s.eval(i / 2000.0) - p));
  }
  return best;
}

std::vector<cv::Point2d> rect_poly(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

}  // namespace

TEST(Geometry, EllipseFitPassesNearEveryLandmark) {
  const auto m = ellipse_mouth({125, 55}, 90, 35, 60, 12);
  const auto c = geometry::fit_contour(m);
  ASSERT_EQ(c.outer.size(), 2u);
  ASSERT_EQ(c.inner.size(), 2u);
  for (int k = 0; k < 12; ++k) EXPECT_LT(distance_to_curve(c.outer, m.points[k]), 0.5) << k;
  for (int k = 12; k < 20; ++k) EXPECT_LT(distance_to_curve(c.inner, m.points[k]), 0.5) << k;
}

TEST(Geometry, SegmentsInterpolateTheirEndLandmarks) {
  const auto m = fixture::resting_mouth();
  const auto c = geometry::fit_contour(m);
  EXPECT_LT(cv::norm(c.outer[0].start() - m.points[0]), 1e-9);
  EXPECT_LT(cv::norm(c.outer[0].end() - m.points[6]), 1e-9);
  EXPECT_LT(cv::norm(c.outer[1].start() - m.points[6]), 1e-9);
  EXPECT_LT(cv::norm(c.outer[1].end() - m.points[0]), 1e-9);
  EXPECT_LT(cv::norm(c.inner[0].start() - m.points[12]), 1e-9);
  EXPECT_LT(cv::norm(c.inner[1].end() - m.points[12]), 1e-9);
}

TEST(Geometry, CollinearOuterPointsAreDegenerate) {
  MouthLandmarks m;
  for (int k = 0; k < kMouthLandmarkCount; ++k) m.points[k] = {10.0 + 3 * k, 40.0};
  try {
    geometry::fit_contour(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateGeometry);
  }
}

TEST(Geometry, MirroredLandmarksGiveMirroredContour) {
  const auto m = fixture::resting_mouth();
  MouthLandmarks mirrored = m;
  for (auto& p : mirrored.points) p.x = 320.0 - p.x;
  const auto a = geometry::fit_contour(m);
  const auto b = geometry::fit_contour(mirrored);
  for (std::size_t s = 0; s < a.outer.size(); ++s) {
    EXPECT_NEAR(b.outer[s].start().x, 320.0 - a.outer[s].start().x, 1e-9);
    EXPECT_NEAR(b.outer[s].end().x, 320.0 - a.outer[s].end().x, 1e-9);
    EXPECT_NEAR(b.outer[s].end().y, a.outer[s].end().y, 1e-9);
    for (double t : {0.25, 0.5, 0.75}) {
      EXPECT_NEAR(b.outer[s].eval(t).x, 320.0 - a.outer[s].eval(t).x, 1e-6);
      EXPECT_NEAR(b.outer[s].eval(t).y, a.outer[s].eval(t).y, 1e-6);
    }
  }
}

TEST(Geometry, RectangleRasterCountsInclusiveCenters) {
  const auto mask = geometry::rasterize_polygon(rect_poly(50, 30, 150, 80));
  EXPECT_EQ(cv::countNonZero(mask), 101 * 51);
  EXPECT_EQ(mask(30, 50), 1);
  EXPECT_EQ(mask(80, 150), 1);
  EXPECT_EQ(mask(81, 150), 0);
}

TEST(Geometry, RasterOutsideIsEmptyAndFullCoverIsFull) {
  EXPECT_EQ(cv::countNonZero(geometry::rasterize_polygon(rect_poly(300, 200, 400, 260))), 0);
  EXPECT_EQ(cv::countNonZero(geometry::rasterize_polygon(rect_poly(-5, -5, 260, 120))),
            kRoiPixels);
  EXPECT_EQ(cv::countNonZero(geometry::rasterize_polygon(rect_poly(0, 0, 249, 109))),
            kRoiPixels);
}

TEST(Geometry, RasterMatchesPointInPolygonOracle) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    // Random star-shaped polygon around the ROI center.
    std::vector<cv::Point2d> poly;
    const int n = 5 + trial % 7;
    for (int i = 0; i < n; ++i) {
      const double t = 2 * std::numbers::pi * (i + 0.8 * u(gen)) / n;
      const double r = 10 + 60 * u(gen);
      poly.push_back({125 + r * std::cos(t), 55 + 0.7 * r * std::sin(t)});
    }
    const auto mask = geometry::rasterize_polygon(poly);
    int mismatches = 0;
    for (int y = 0; y < kRoiHeight; ++y) {
      for (int x = 0; x < kRoiWidth; ++x) {
        mismatches += (mask(y, x) != 0) != oracle::inside_or_on(poly, {double(x), double(y)});
      }
    }
    EXPECT_EQ(mismatches, 0) << "trial " << trial;
  }
}

TEST(Geometry, PerimeterMatchesBoundaryWalk) {
  cv::Mat1b mask(kRoiHeight, kRoiWidth, uchar(0));
  mask(cv::Rect(60, 20, 100, 50)).setTo(1);
  const double walked = oracle::moore_perimeter(mask);
  EXPECT_DOUBLE_EQ(walked, 2.0 * (99 + 49));
  const double lib = geometry::boundary_length(geometry::trace_boundary(mask));
  EXPECT_NEAR(lib, walked, 2.0);

  const auto blob = geometry::rasterize_mask(geometry::fit_contour(
      ellipse_mouth({125, 55}, 100, 40, 70, 10)));
  EXPECT_NEAR(geometry::boundary_length(geometry::trace_boundary(blob)),
              oracle::moore_perimeter(blob), 2.0);
}

TEST(Geometry, ThicknessSplitsRunAtMidline) {
  cv::Mat1b mask(kRoiHeight, kRoiWidth, uchar(0));
  mask(cv::Rect(40, 30, 1, 30)).setTo(1);  // rows 30..59
  std::vector<int> up, lo;
  geometry::column_thickness(mask, {0, 42}, {249, 42}, up, lo);
  EXPECT_EQ(up[40], 12);
  EXPECT_EQ(lo[40], 18);
}

TEST(Geometry, StaticFeaturesOnFullMask) {
  LipRoi roi;
  roi.mask = cv::Mat1b(kRoiHeight, kRoiWidth, uchar(1));
  roi.color = cv::Mat3b(kRoiHeight, kRoiWidth, cv::Vec3b(10, 20, 30));
  roi.gray = cv::Mat1b(kRoiHeight, kRoiWidth, uchar(20));
  roi.contour.left_corner = {0, 55};
  roi.contour.right_corner = {249, 55};
  const auto f = geometry::static_features(roi);
  EXPECT_EQ(f.area_px, kRoiPixels);
  EXPECT_DOUBLE_EQ(f.symmetry, 1.0);
  EXPECT_DOUBLE_EQ(f.color[2].mean, 30.0);
  EXPECT_DOUBLE_EQ(f.color[0].stddev, 0.0);
}

TEST(Geometry, EmptyMaskIsRejected) {
  LipRoi roi;
  roi.mask = cv::Mat1b(kRoiHeight, kRoiWidth, uchar(0));
  roi.color = cv::Mat3b(kRoiHeight, kRoiWidth, cv::Vec3b(0, 0, 0));
  try {
    geometry::static_features(roi);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyMask);
  }
}

TEST(Geometry, ShapeInvariantsOnFittedMouths) {
  for (double t : {0.0, 0.1, 0.2, 0.3}) {
    const auto m = fixture::resting_mouth(t);
    auto c = geometry::fit_contour(m);
    // Map into ROI-sized coordinates around the mouth.
    RoiTransform tr;
    tr.offset_x = 60;
    tr.offset_y = 100;
    tr.scale_x = 1.2;
    tr.scale_y = 1.0;
    LipRoi roi;
    roi.contour = tr.apply(c);
    roi.mask = geometry::rasterize_mask(roi.contour);
    roi.color = cv::Mat3b(kRoiHeight, kRoiWidth, cv::Vec3b(50, 60, 150));
    const auto f = geometry::static_features(roi);

    int up = 0, lo = 0;
    for (int v : f.upper_thickness) up += v;
    for (int v : f.lower_thickness) lo += v;
    EXPECT_EQ(up + lo, f.area_px);
    EXPECT_GT(f.symmetry, 0.0);
    EXPECT_LE(f.symmetry, 1.0);
    EXPECT_GT(f.perimeter_px, 0.0);
    EXPECT_GE(f.curvature_mean, 0.0);

    cv::Mat1b flipped;
    cv::flip(roi.mask, flipped, 1);
    EXPECT_DOUBLE_EQ(geometry::mirror_symmetry(flipped), f.symmetry);
  }
}
