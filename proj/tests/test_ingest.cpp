#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lipdyn/error.hpp"
#include "lipdyn/ingest.hpp"
#include "lipdyn/lip_geometry.hpp"

using namespace lipdyn;

namespace {

std::string record(int frame, int points, double base = 0.0) {
  std::ostringstream s;
  s << "{\"frame\":" << frame << ",\"t_ms\":" << frame * 40 << ",\"pts\":[";
  for (int i = 0; i < points; ++i) {
    s << (i ? "," : "") << "[" << base + i << "," << base + 2 * i << "]";
  }
  s << "]}";
  return s.str();
}

LipContour box_contour(double x0, double y0, double x1, double y1) {
  auto line = [](cv::Point2d a, cv::Point2d b) {
    CurveSegment s;
    s.coeff_x = {a.x, b.x - a.x};
    s.coeff_y = {a.y, b.y - a.y};
    return s;
  };
  LipContour c;
  c.outer = {line({x0, y0}, {x1, y0}), line({x1, y0}, {x1, y1}), line({x1, y1}, {x0, y1}),
             line({x0, y1}, {x0, y0})};
  c.left_corner = {x0, 0.5 * (y0 + y1)};
  c.right_corner = {x1, 0.5 * (y0 + y1)};
  return c;
}

}  // namespace

TEST(Ingest, SingleRecordRoundTrip) {
  std::istringstream in(record(0, 68) + "\n");
  const auto frames = ingest::parse_landmark_stream(in);
  ASSERT_EQ(frames.size(), 1u);
  EXPECT_EQ(frames[0].frame_index, 0u);
  EXPECT_EQ(frames[0].points[5], cv::Point2d(5, 10));
  EXPECT_EQ(frames[0].points[67], cv::Point2d(67, 134));

  std::istringstream again(ingest::format_landmark_record(frames[0]) + "\n");
  EXPECT_EQ(ingest::parse_landmark_stream(again), frames);
}

TEST(Ingest, ShortRecordReportsItsLine) {
  std::istringstream in(record(0, 68) + "\n" + record(1, 67) + "\n");
  try {
    ingest::parse_landmark_stream(in);
    FAIL() << "expected MalformedRecord";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedRecord);
    ASSERT_TRUE(e.line());
    EXPECT_EQ(*e.line(), 2u);
    EXPECT_NE(e.diagnostic().find("line=2"), std::string::npos);
  }
}

TEST(Ingest, GarbageLineIsMalformed) {
  std::istringstream in("{not json\n");
  try {
    ingest::parse_landmark_stream(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedRecord);
    EXPECT_EQ(e.line().value_or(0), 1u);
  }
}

TEST(Ingest, RecordsAreSortedByFrame) {
  std::istringstream in(record(3, 68, 1.0) + "\n" + record(1, 68, 2.0) + "\n");
  const auto frames = ingest::parse_landmark_stream(in);
  ASSERT_EQ(frames.size(), 2u);
  EXPECT_EQ(frames[0].frame_index, 1u);
  EXPECT_EQ(frames[1].frame_index, 3u);
  EXPECT_EQ(frames[0].points[0], cv::Point2d(2, 2));
}

TEST(Ingest, FileRoundTripKeepsImageRef) {
  auto f = fixture::resting_face();
  f.frame_index = 4;
  f.timestamp_ms = 160.0;
  f.image_ref = "frames/000004.png";
  const auto path = fixture::scratch("ingest") / "one.lmk.jsonl";
  const std::vector<LandmarkFrame> frames{f};
  ingest::write_landmark_file(path, frames);
  EXPECT_EQ(ingest::parse_landmark_file(path), frames);
}

TEST(Ingest, MissingFileIsIoFailure) {
  try {
    ingest::parse_landmark_file("/nonexistent/x.lmk.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoFailure);
  }
}

TEST(Ingest, MouthIndexing) {
  LandmarkFrame f;
  f.points[48] = {10, 20};
  f.points[67] = {99, 5};
  const auto m = ingest::extract_mouth(f);
  EXPECT_EQ(m.points[0], cv::Point2d(10, 20));
  EXPECT_EQ(m.points[19], cv::Point2d(99, 5));

  const auto zero = ingest::extract_mouth(LandmarkFrame{});
  for (const auto& p : zero.points) EXPECT_EQ(p, cv::Point2d(0, 0));
}

TEST(Ingest, CropMarginArithmetic) {
  MouthLandmarks m;
  for (auto& p : m.points) p = {150, 120};
  m.points[0] = {100, 100};
  m.points[6] = {200, 144};
  const cv::Rect2d r = ingest::crop_rect(m, 0.15);
  EXPECT_NEAR(r.x, 85.0, 1e-12);
  EXPECT_NEAR(r.y, 93.4, 1e-12);
  EXPECT_NEAR(r.x + r.width, 215.0, 1e-12);
  EXPECT_NEAR(r.y + r.height, 150.6, 1e-12);
}

TEST(Ingest, IdenticalPointsAreDegenerate) {
  MouthLandmarks m;
  for (auto& p : m.points) p = {40, 40};
  try {
    ingest::crop_rect(m, 0.15);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateBox);
  }
}

TEST(Ingest, RoiTransformMapsCornersToPixelCenters) {
  const auto t = ingest::roi_transform({85.0, 93.4, 130.0, 57.2});
  const auto a = t.apply({85.0, 93.4});
  const auto b = t.apply({215.0, 150.6});
  EXPECT_NEAR(a.x, 0.0, 1e-9);
  EXPECT_NEAR(a.y, 0.0, 1e-9);
  EXPECT_NEAR(b.x, kRoiWidth - 1, 1e-9);
  EXPECT_NEAR(b.y, kRoiHeight - 1, 1e-9);
  const auto back = t.invert(t.apply({123.0, 111.0}));
  EXPECT_NEAR(back.x, 123.0, 1e-9);
  EXPECT_NEAR(back.y, 111.0, 1e-9);
}

TEST(Ingest, CropNormalizeShapesAndFullMask) {
  const auto mouth = fixture::resting_mouth();
  cv::Mat3b image(240, 320, cv::Vec3b(30, 60, 90));
  const auto roi = ingest::crop_normalize(image, mouth, box_contour(-1000, -1000, 1000, 1000));
  EXPECT_EQ(roi.gray.size(), cv::Size(kRoiWidth, kRoiHeight));
  EXPECT_EQ(roi.color.size(), cv::Size(kRoiWidth, kRoiHeight));
  EXPECT_EQ(cv::countNonZero(roi.mask), kRoiPixels);
  EXPECT_EQ(roi.color(50, 50), cv::Vec3b(30, 60, 90));
}

TEST(Ingest, CropNormalizeOnFittedMouth) {
  const auto mouth = fixture::resting_mouth();
  cv::Mat1b image(240, 320, uchar(100));
  const auto contour = geometry::fit_contour(mouth);
  const auto roi = ingest::crop_normalize(image, mouth, contour);
  const int area = cv::countNonZero(roi.mask);
  EXPECT_GT(area, kRoiPixels / 4);
  EXPECT_LT(area, kRoiPixels);
  // Corners land one margin in from the ROI edges.
  EXPECT_NEAR(roi.contour.left_corner.x, 0.15 / 1.3 * (kRoiWidth - 1), 1.0);
}
