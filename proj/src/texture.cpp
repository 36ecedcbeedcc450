#include <algorithm>
#include <cmath>

#include <opencv2/imgproc.hpp>

#include "lipdyn/error.hpp"
#include "lipdyn/texture.hpp"

namespace lipdyn::texture {

std::string_view region_name(Region r) {
  static constexpr std::array<std::string_view, kRegionCount> names{"UL", "UM", "UR",
                                                                    "LL", "LM", "LR"};
  return names[static_cast<int>(r)];
}

Region SixRegions::locate(cv::Point2d p) const {
  const int x = std::clamp(static_cast<int>(std::floor(p.x)), bounds.x,
                           bounds.x + bounds.width - 1);
  const int y = std::clamp(static_cast<int>(std::floor(p.y)), bounds.y,
                           bounds.y + bounds.height - 1);
  for (int i = 0; i < kRegionCount; ++i) {
    if (rects[i].contains(cv::Point(x, y))) return static_cast<Region>(i);
  }
  // Only reachable when a half is empty; fall back on the column band.
  const int col = rects[0].width > 0 && x < rects[0].x + rects[0].width ? 0
                  : x < rects[1].x + rects[1].width                      ? 1
                                                                         : 2;
  return static_cast<Region>((rects[col].height > 0 ? 0 : 3) + col);
}

SixRegions split_regions(const cv::Mat1b& mask, cv::Point2d left_corner,
                         cv::Point2d right_corner) {
  const cv::Rect box = cv::boundingRect(mask);
  if (box.area() == 0) throw Error(ErrorCode::EmptyMask, "lip mask is empty");

  SixRegions out;
  out.bounds = box;
  out.valid = mask;

  const int top = box.y, bottom = box.y + box.height;  // exclusive bottom
  int split = static_cast<int>(std::lround(0.5 * (left_corner.y + right_corner.y)));
  if (box.height >= 2) {
    split = std::clamp(split, top + 1, bottom - 1);
  } else {
    split = std::clamp(split, top, bottom);
  }

  const int base = box.width / 3;
  const std::array<int, 3> widths{box.width - 2 * base, base, base};
  int x = box.x;
  for (int col = 0; col < 3; ++col) {
    out.rects[col] = cv::Rect(x, top, widths[col], split - top);
    out.rects[3 + col] = cv::Rect(x, split, widths[col], bottom - split);
    x += widths[col];
  }
  return out;
}

SixRegions split_regions(const LipRoi& roi) {
  return split_regions(roi.mask, roi.contour.left_corner, roi.contour.right_corner);
}

std::array<double, kRawTextureSize> frame_texture(const LipRoi& roi,
                                                  const SixRegions& regions,
                                                  const TextureOptions& options) {
  std::array<double, kRawTextureSize> raw{};
  const SteerableBasis basis = steerable_basis(roi.gray, options.sigma);
  for (int o = 0; o < kOrientationCount; ++o) {
    const cv::Mat1d response = steer(basis, o * kOrientationStep);
    for (int r = 0; r < kRegionCount; ++r) {
      const GlcmStats stats = glcm_stats(glcm(response, regions.rects[r], regions.valid,
                                              options.glcm));
      for (int f = 0; f < kGlcmStatCount; ++f) {
        raw[(r * kGlcmStatCount + f) * kOrientationCount + o] = stats[f];
      }
    }
  }
  return raw;
}

}  // namespace lipdyn::texture
