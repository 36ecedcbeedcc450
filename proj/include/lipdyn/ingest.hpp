#pragma once

#include <filesystem>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "lipdyn/types.hpp"

namespace lipdyn::ingest {

/// Parses `.lmk.jsonl` content. Records are returned sorted by frame index.
/// Throws Error{MalformedRecord} carrying the 1-based line number.
std::vector<LandmarkFrame> parse_landmark_stream(std::istream& in);
std::vector<LandmarkFrame> parse_landmark_file(const std::filesystem::path& path);

std::string format_landmark_record(const LandmarkFrame& frame);
void write_landmark_file(const std::filesystem::path& path,
                         std::span<const LandmarkFrame> frames);

MouthLandmarks extract_mouth(const LandmarkFrame& frame);

struct CropOptions {
  double margin = 0.15;  // fraction of box width/height added on each side
};

/// Mouth bounding box grown by the margin. Throws DegenerateBox.
cv::Rect2d crop_rect(const MouthLandmarks& mouth, double margin);

/// Maps the crop rectangle corners onto ROI pixel centers (0,0)..(249,109).
RoiTransform roi_transform(const cv::Rect2d& crop);

/// Crops `image` (gray or BGR, 8-bit) around the mouth and resizes to
/// 250x110. Gray and color are bilinear; the mask is the rasterized outer
/// contour in ROI coordinates.
LipRoi crop_normalize(const cv::Mat& image, const MouthLandmarks& mouth,
                      const LipContour& contour, const CropOptions& options = {});

/// Reads a frame image as BGR. Throws IoFailure.
cv::Mat3b read_frame(const std::filesystem::path& path);

}  // namespace lipdyn::ingest
