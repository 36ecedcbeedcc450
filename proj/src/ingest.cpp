#include "lipdyn/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "lipdyn/error.hpp"
#include "lipdyn/lip_geometry.hpp"

namespace lipdyn {

cv::Point2d CurveSegment::eval(double t) const {
  double x = 0.0, y = 0.0;
  for (auto it = coeff_x.rbegin(); it != coeff_x.rend(); ++it) x = x * t + *it;
  for (auto it = coeff_y.rbegin(); it != coeff_y.rend(); ++it) y = y * t + *it;
  return {x, y};
}

cv::Point2d CurveSegment::derivative(double t) const {
  auto horner_d = [t](const std::vector<double>& c) {
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 1;) v = v * t + static_cast<double>(k) * c[k];
    return v;
  };
  return {horner_d(coeff_x), horner_d(coeff_y)};
}

namespace {
std::vector<cv::Point2d> chain_polyline(const std::vector<CurveSegment>& chain,
                                        int samples) {
  std::vector<cv::Point2d> out;
  out.reserve(chain.size() * static_cast<std::size_t>(samples));
  for (const auto& seg : chain) {
    for (int i = 0; i < samples; ++i) {
      out.push_back(seg.eval(static_cast<double>(i) / samples));
    }
  }
  return out;
}
}  // namespace

std::vector<cv::Point2d> LipContour::outer_polyline(int samples) const {
  return chain_polyline(outer, samples);
}

std::vector<cv::Point2d> LipContour::inner_polyline(int samples) const {
  return chain_polyline(inner, samples);
}

CurveSegment RoiTransform::apply(const CurveSegment& seg) const {
  CurveSegment out = seg;
  for (std::size_t k = 0; k < out.coeff_x.size(); ++k) {
    out.coeff_x[k] = seg.coeff_x[k] * scale_x - (k == 0 ? offset_x * scale_x : 0.0);
  }
  for (std::size_t k = 0; k < out.coeff_y.size(); ++k) {
    out.coeff_y[k] = seg.coeff_y[k] * scale_y - (k == 0 ? offset_y * scale_y : 0.0);
  }
  return out;
}

LipContour RoiTransform::apply(const LipContour& contour) const {
  LipContour out;
  for (const auto& s : contour.outer) out.outer.push_back(apply(s));
  for (const auto& s : contour.inner) out.inner.push_back(apply(s));
  out.left_corner = apply(contour.left_corner);
  out.right_corner = apply(contour.right_corner);
  return out;
}

namespace ingest {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::MalformedRecord, what, line);
}

double finite_number(const ordered_json& v, std::size_t line, const char* what) {
  if (!v.is_number()) malformed(line, std::string("non-numeric ") + what);
  double d = v.get<double>();
  if (!std::isfinite(d)) malformed(line, std::string("non-finite ") + what);
  return d;
}

LandmarkFrame parse_record(const std::string& text, std::size_t line) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    malformed(line, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) malformed(line, "record is not an object");
  for (const char* key : {"frame", "t_ms", "pts"}) {
    if (!j.contains(key)) malformed(line, std::string("missing key ") + key);
  }

  LandmarkFrame f;
  const auto& jf = j["frame"];
  if (jf.is_number_unsigned()) {
    f.frame_index = jf.get<std::uint64_t>();
  } else if (jf.is_number_integer() && jf.get<std::int64_t>() >= 0) {
    f.frame_index = static_cast<std::uint64_t>(jf.get<std::int64_t>());
  } else {
    malformed(line, "frame must be a nonnegative integer");
  }

  f.timestamp_ms = finite_number(j["t_ms"], line, "t_ms");
  if (f.timestamp_ms < 0.0) malformed(line, "negative t_ms");

  const auto& pts = j["pts"];
  if (!pts.is_array()) malformed(line, "pts is not an array");
  if (pts.size() != kLandmarkCount) {
    malformed(line, "expected 68 points, got " + std::to_string(pts.size()));
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    if (!p.is_array() || p.size() != 2) malformed(line, "point is not an [x, y] pair");
    const double x = finite_number(p[0], line, "coordinate");
    const double y = finite_number(p[1], line, "coordinate");
    if (x < 0.0 || y < 0.0) malformed(line, "negative coordinate");
    f.points[i] = {x, y};
  }

  if (j.contains("img") && !j["img"].is_null()) {
    if (!j["img"].is_string()) malformed(line, "img is not a string");
    f.image_ref = j["img"].get<std::string>();
  }
  return f;
}

}  // namespace

std::vector<LandmarkFrame> parse_landmark_stream(std::istream& in) {
  std::vector<LandmarkFrame> frames;
  std::set<std::uint64_t> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    LandmarkFrame f = parse_record(text, line);
    if (!seen.insert(f.frame_index).second) {
      malformed(line, "duplicate frame index " + std::to_string(f.frame_index));
    }
    frames.push_back(std::move(f));
  }
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read error");
  std::stable_sort(frames.begin(), frames.end(),
                   [](const LandmarkFrame& a, const LandmarkFrame& b) {
                     return a.frame_index < b.frame_index;
                   });
  return frames;
}

std::vector<LandmarkFrame> parse_landmark_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return parse_landmark_stream(in);
}

std::string format_landmark_record(const LandmarkFrame& frame) {
  ordered_json j;
  j["frame"] = frame.frame_index;
  j["t_ms"] = frame.timestamp_ms;
  ordered_json pts = ordered_json::array();
  for (const auto& p : frame.points) pts.push_back({p.x, p.y});
  j["pts"] = std::move(pts);
  if (frame.image_ref) j["img"] = *frame.image_ref;
  return j.dump();
}

void write_landmark_file(const std::filesystem::path& path,
                         std::span<const LandmarkFrame> frames) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  for (const auto& f : frames) out << format_landmark_record(f) << '\n';
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

MouthLandmarks extract_mouth(const LandmarkFrame& frame) {
  MouthLandmarks m;
  std::copy_n(frame.points.begin() + kMouthFirstLandmark, kMouthLandmarkCount,
              m.points.begin());
  return m;
}

cv::Rect2d crop_rect(const MouthLandmarks& mouth, double margin) {
  double x0 = mouth.points[0].x, x1 = x0, y0 = mouth.points[0].y, y1 = y0;
  for (const auto& p : mouth.points) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  const double w = x1 - x0, h = y1 - y0;
  if (!(w > 0.0) || !(h > 0.0)) {
    throw Error(ErrorCode::DegenerateBox, "mouth bounding box has zero area");
  }
  return {x0 - margin * w, y0 - margin * h, w * (1.0 + 2.0 * margin),
          h * (1.0 + 2.0 * margin)};
}

RoiTransform roi_transform(const cv::Rect2d& crop) {
  RoiTransform t;
  t.offset_x = crop.x;
  t.offset_y = crop.y;
  t.scale_x = (kRoiWidth - 1) / crop.width;
  t.scale_y = (kRoiHeight - 1) / crop.height;
  return t;
}

LipRoi crop_normalize(const cv::Mat& image, const MouthLandmarks& mouth,
                      const LipContour& contour, const CropOptions& options) {
  const cv::Rect2d crop = crop_rect(mouth, options.margin);
  LipRoi roi;
  roi.transform = roi_transform(crop);

  cv::Mat3b bgr;
  if (image.type() == CV_8UC3) {
    bgr = image;
  } else if (image.type() == CV_8UC1) {
    cv::cvtColor(image, bgr, cv::COLOR_GRAY2BGR);
  } else {
    throw Error(ErrorCode::IoFailure, "unsupported image type");
  }

  // ROI pixel (u, v) samples source point (u / sx + ox, v / sy + oy).
  const auto& t = roi.transform;
  const cv::Matx23d roi_to_src(1.0 / t.scale_x, 0.0, t.offset_x,
                               0.0, 1.0 / t.scale_y, t.offset_y);
  cv::warpAffine(bgr, roi.color, roi_to_src, cv::Size(kRoiWidth, kRoiHeight),
                 cv::INTER_LINEAR | cv::WARP_INVERSE_MAP, cv::BORDER_REPLICATE);
  cv::cvtColor(roi.color, roi.gray, cv::COLOR_BGR2GRAY);

  roi.contour = t.apply(contour);
  roi.mask = geometry::rasterize_mask(roi.contour);
  return roi;
}

cv::Mat3b read_frame(const std::filesystem::path& path) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (img.empty()) throw Error(ErrorCode::IoFailure, "cannot read image " + path.string());
  return img;
}

}  // namespace ingest
}  // namespace lipdyn
