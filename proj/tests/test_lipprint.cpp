#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <opencv2/imgproc.hpp>

#include "lipdyn/error.hpp"
#include "lipdyn/lipprint.hpp"

using namespace lipdyn;
using namespace lipdyn::lipprint;
using texture::Region;

namespace {

LineSegment seg(double x1, double y1, double x2, double y2, Region r = Region::UL) {
  return {{x1, y1}, {x2, y2}, r};
}

LipRoi flat_roi(uchar gray) {
  LipRoi roi;
  roi.gray = cv::Mat1b(kRoiHeight, kRoiWidth, gray);
  roi.mask = cv::Mat1b(kRoiHeight, kRoiWidth, uchar(0));
  roi.mask(cv::Rect(20, 10, 210, 90)).setTo(1);
  return roi;
}

texture::SixRegions full_regions() {
  cv::Mat1b mask(kRoiHeight, kRoiWidth, uchar(1));
  return texture::split_regions(mask, {0, 55}, {249, 55});
}

/// Random edge raster: a handful of 1-px lines at arbitrary angles.
cv::Mat1b random_edges(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  cv::Mat1b img(kRoiHeight, kRoiWidth, uchar(0));
  const int n = 3 + static_cast<int>(u(gen) * 8);
  for (int i = 0; i < n; ++i) {
    const cv::Point a(static_cast<int>(u(gen) * kRoiWidth), static_cast<int>(u(gen) * kRoiHeight));
    const double ang = u(gen) * CV_PI, len = 5 + u(gen) * 60;
    const cv::Point b(static_cast<int>(a.x + len * std::cos(ang)),
                      static_cast<int>(a.y + len * std::sin(ang)));
    cv::line(img, a, b, cv::Scalar(1), 1, cv::LINE_8);
  }
  return img;
}

}  // namespace

TEST(LineSegment, AngleAndLength) {
  EXPECT_DOUBLE_EQ(seg(0, 0, 3, 4).length(), 5.0);
  EXPECT_DOUBLE_EQ(seg(0, 0, 10, 0).angle(), 0.0);
  EXPECT_DOUBLE_EQ(seg(10, 0, 0, 0).angle(), 0.0);
  EXPECT_DOUBLE_EQ(seg(0, 0, 0, 10).angle(), 90.0);
  EXPECT_DOUBLE_EQ(seg(0, 10, 0, 0).angle(), 90.0);
  EXPECT_NEAR(seg(0, 0, -1, 1).angle(), 135.0, 1e-12);
  EXPECT_DOUBLE_EQ(angle_difference(5.0, 175.0), 10.0);
}

TEST(Preprocess, ConstantRoiHasNoEdges) {
  EXPECT_EQ(cv::countNonZero(preprocess_lipprint(flat_roi(120))), 0);
}

TEST(Preprocess, VerticalStepGivesOneEdgeColumn) {
  auto roi = flat_roi(60);
  roi.gray(cv::Rect(125, 0, 125, kRoiHeight)).setTo(200);
  const auto edges = preprocess_lipprint(roi);
  ASSERT_GT(cv::countNonZero(edges), 0);
  for (int r = 0; r < edges.rows; ++r) {
    for (int c = 0; c < edges.cols; ++c) {
      if (edges(r, c)) EXPECT_NEAR(c, 124.5, 1.5) << r << "," << c;
    }
  }
}

TEST(Preprocess, EdgesOutsideMaskAreRemoved) {
  auto roi = flat_roi(60);
  roi.gray(cv::Rect(5, 0, 245, kRoiHeight)).setTo(200);  // step at column 5, outside mask
  EXPECT_EQ(cv::countNonZero(preprocess_lipprint(roi)), 0);
}

TEST(Preprocess, EmptyMask) {
  auto roi = flat_roi(60);
  roi.mask.setTo(0);
  try {
    preprocess_lipprint(roi);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyMask);
  }
}

TEST(DetectLines, BlankRaster) {
  const cv::Mat1b blank(kRoiHeight, kRoiWidth, uchar(0));
  EXPECT_TRUE(detect_lines(blank, full_regions()).empty());
}

TEST(DetectLines, VerticalLine) {
  cv::Mat1b img(kRoiHeight, kRoiWidth, uchar(0));
  cv::line(img, {100, 30}, {100, 69}, cv::Scalar(1));
  const auto lines = detect_lines(img, full_regions());
  ASSERT_FALSE(lines.empty());
  bool found = false;
  for (const auto& l : lines) {
    EXPECT_NEAR(l.p1.x, 100.0, 0.5);
    EXPECT_NEAR(l.p2.x, 100.0, 0.5);
    if (std::abs(l.angle() - 90.0) <= 2.0 && l.length() >= 30.0) found = true;
  }
  EXPECT_TRUE(found);
}

TEST(DetectLines, TwoParallelLines) {
  cv::Mat1b img(kRoiHeight, kRoiWidth, uchar(0));
  cv::line(img, {80, 40}, {80, 59}, cv::Scalar(1));
  cv::line(img, {95, 40}, {95, 59}, cv::Scalar(1));
  const auto lines = detect_lines(img, full_regions());
  ASSERT_GE(lines.size(), 2u);
  bool left = false, right = false;
  for (const auto& l : lines) {
    left |= std::abs(l.center().x - 80) < 1;
    right |= std::abs(l.center().x - 95) < 1;
  }
  EXPECT_TRUE(left && right);
}

TEST(DetectLines, RegionLabelsFollowCenters) {
  cv::Mat1b img(kRoiHeight, kRoiWidth, uchar(0));
  cv::line(img, {200, 70}, {200, 100}, cv::Scalar(1));
  const auto lines = detect_lines(img, full_regions());
  ASSERT_FALSE(lines.empty());
  for (const auto& l : lines) EXPECT_EQ(l.region, Region::LR);
}

TEST(Link, OnePixelGapMerges) {
  const auto out = link_segments({seg(0, 0, 10, 0), seg(11, 0, 20, 0)});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(std::min(out[0].p1.x, out[0].p2.x), 0.0);
  EXPECT_EQ(std::max(out[0].p1.x, out[0].p2.x), 20.0);
}

TEST(Link, ThreePixelGapStays) {
  EXPECT_EQ(link_segments({seg(0, 0, 10, 0), seg(13, 0, 20, 0)}).size(), 2u);
}

TEST(Link, PerpendicularStays) {
  EXPECT_EQ(link_segments({seg(0, 0, 10, 0), seg(11, 0, 11, 10)}).size(), 2u);
}

TEST(Link, ChainsToFixpoint) {
  const auto out = link_segments({seg(0, 0, 0, 10), seg(0, 21.5, 0, 30), seg(0, 11, 0, 20)});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0].length(), 30.0);
}

TEST(Link, NeverGrowsCountOrInventsEndpoints) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<LineSegment> lines;
    for (int i = 0; i < 12; ++i) {
      const double x = u(gen) * 40, y = u(gen) * 40, a = u(gen) * 0.3 + 1.3, len = 2 + u(gen) * 8;
      lines.push_back(seg(x, y, x + len * std::cos(a), y + len * std::sin(a)));
    }
    const auto out = link_segments(lines);
    EXPECT_LE(out.size(), lines.size());
    // Merges keep the farthest pair of endpoints, so every output endpoint
    // is an input endpoint and the longest segment never shrinks.
    double longest_in = 0.0, longest_out = 0.0;
    for (const auto& l : lines) longest_in = std::max(longest_in, l.length());
    for (const auto& l : out) {
      longest_out = std::max(longest_out, l.length());
      for (auto p : {l.p1, l.p2}) {
        const bool known = std::any_of(lines.begin(), lines.end(), [&](const LineSegment& s) {
          return s.p1 == p || s.p2 == p;
        });
        EXPECT_TRUE(known);
      }
    }
    EXPECT_GE(longest_out, longest_in);
  }
}

TEST(Filter, Thresholds) {
  EXPECT_TRUE(filter_lines(std::vector{seg(0, 0, 0, 9)}).empty());
  EXPECT_TRUE(filter_lines(std::vector{seg(0, 0, 50, 0)}).empty());
  EXPECT_EQ(filter_lines(std::vector{seg(0, 0, 0, 11)}).size(), 1u);
  EXPECT_TRUE(filter_lines(std::vector{seg(0, 0, 0, 10)}).empty());
  // Angle gate is inclusive at both ends.
  const double r = 20.0;
  const double a40 = 40.0 * CV_PI / 180.0;
  EXPECT_EQ(filter_lines(std::vector{seg(0, 0, r * std::cos(a40), r * std::sin(a40))}).size(), 1u);
}

TEST(Filter, PipelineInvariantOnRandomRasters) {
  std::mt19937_64 gen(4);
  const auto regions = full_regions();
  for (int t = 0; t < 50; ++t) {
    const auto lines = filter_lines(link_segments(detect_lines(random_edges(gen), regions)));
    for (const auto& l : lines) {
      EXPECT_GT(l.length(), 10.0);
      EXPECT_GE(l.angle(), 40.0);
      EXPECT_LE(l.angle(), 140.0);
    }
  }
}

TEST(Motion, IdenticalFramesGiveZeroVectors) {
  const std::vector<LineSegment> lines{seg(10, 10, 12, 30, Region::UL),
                                       seg(100, 60, 98, 90, Region::LM)};
  const auto m = match_motion(lines, lines);
  ASSERT_EQ(m.vectors.size(), 2u);
  for (const auto& v : m.vectors) {
    EXPECT_EQ(v.dx, 0.0);
    EXPECT_EQ(v.dy, 0.0);
  }
  EXPECT_EQ(m.mean_magnitude, 0.0);
}

TEST(Motion, RigidTranslation) {
  std::vector<LineSegment> prev{seg(10, 10, 12, 30, Region::UL), seg(100, 10, 100, 25, Region::UM),
                                seg(200, 60, 195, 90, Region::LR)};
  std::vector<LineSegment> curr = prev;
  for (auto& l : curr) {
    l.p1.y += 5;
    l.p2.y += 5;
  }
  const auto m = match_motion(prev, curr);
  ASSERT_EQ(m.vectors.size(), 3u);
  for (const auto& v : m.vectors) {
    EXPECT_DOUBLE_EQ(v.dx, 0.0);
    EXPECT_DOUBLE_EQ(v.dy, 5.0);
    EXPECT_DOUBLE_EQ(v.magnitude(), 5.0);
  }
  EXPECT_DOUBLE_EQ(m.mean_direction_deg, 90.0);
  EXPECT_DOUBLE_EQ(m.mean_magnitude, 5.0);
}

TEST(Motion, DifferentRegionsDoNotMatch) {
  const std::vector<LineSegment> prev{seg(10, 10, 12, 30, Region::UL)};
  const std::vector<LineSegment> curr{seg(10, 10, 12, 30, Region::LR)};
  EXPECT_TRUE(match_motion(prev, curr).empty());
}

TEST(Motion, FarCandidatesAreRejected) {
  const std::vector<LineSegment> prev{seg(10, 10, 10, 30)};
  const std::vector<LineSegment> curr{seg(26, 10, 26, 30)};
  EXPECT_TRUE(match_motion(prev, curr).empty());
}

TEST(Motion, LongestCurrentLineLeadsEachRegion) {
  const std::vector<LineSegment> prev{seg(10, 10, 10, 30), seg(40, 10, 40, 50)};
  const std::vector<LineSegment> curr{seg(11, 10, 11, 30), seg(40, 12, 40, 52)};
  const auto m = match_motion(prev, curr);
  ASSERT_EQ(m.vectors.size(), 2u);
  EXPECT_DOUBLE_EQ(m.vectors[0].dy, 2.0);  // the 40-px line
  EXPECT_DOUBLE_EQ(m.vectors[1].dx, 1.0);
}

TEST(Motion, AtMostEightVectorsAndTranslationEquivariant) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto regions = full_regions();
  for (int t = 0; t < 30; ++t) {
    // Lines 40 px apart so each has a single candidate within the gate.
    std::vector<LineSegment> prev, curr;
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 2; ++j) {
        const double x = 20 + 40 * i, y = 10 + 55 * j, len = 11 + u(gen) * 20;
        prev.push_back(seg(x, y, x + 2, y + len));
        curr.push_back(seg(x + u(gen) * 3, y + u(gen) * 3, x + 2, y + len + u(gen) * 3));
      }
    }
    assign_regions(prev, regions);
    assign_regions(curr, regions);
    const auto base = match_motion(prev, curr);
    EXPECT_EQ(base.vectors.size(), 8u);
    auto moved = curr;
    for (auto& l : moved) {
      l.p1 += cv::Point2d(4.0, -3.0);
      l.p2 += cv::Point2d(4.0, -3.0);
    }
    const auto shifted = match_motion(prev, moved);
    ASSERT_EQ(shifted.vectors.size(), base.vectors.size());
    for (std::size_t k = 0; k < base.vectors.size(); ++k) {
      EXPECT_NEAR(shifted.vectors[k].dx, base.vectors[k].dx + 4.0, 1e-12);
      EXPECT_NEAR(shifted.vectors[k].dy, base.vectors[k].dy - 3.0, 1e-12);
    }
  }
}

TEST(Motion, SummaryPresenceAndTrajectory) {
  const std::vector<LineSegment> a{seg(10, 10, 10, 30)};
  std::vector<LineSegment> b{seg(10, 13, 10, 33)};
  std::vector<LineSegment> c{seg(14, 13, 14, 33)};

  const std::vector<MotionVectorSet> still{match_motion(a, a), match_motion(a, a)};
  EXPECT_FALSE(summarize_motion(still).present);
  EXPECT_FALSE(summarize_motion(std::vector<MotionVectorSet>{}).present);

  const std::vector<MotionVectorSet> moving{match_motion(a, b), match_motion(b, c)};
  const auto w = summarize_motion(moving);
  ASSERT_TRUE(w.present);
  EXPECT_DOUBLE_EQ(w.trajectory_length, 7.0);
  // Turn of 90 degrees over a mean step of 3.5 px.
  EXPECT_NEAR(w.trajectory_curvature, (CV_PI / 2) / 3.5, 1e-12);
  EXPECT_DOUBLE_EQ(w.values[0], 2.0);  // slot 0 mean dx
  EXPECT_DOUBLE_EQ(w.values[1], 1.5);  // slot 0 mean dy
  EXPECT_DOUBLE_EQ(w.values[16], std::hypot(2.0, 1.5));
}
