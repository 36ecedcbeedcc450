#include "lipdyn/window_features.hpp"

#include <algorithm>

#include "binary_io.hpp"
#include "lipdyn/error.hpp"

namespace lipdyn::features {

std::array<double, kShapeSize> shape_vector(const geometry::StaticShapeFeatures& f) {
  const auto& c = f.color;  // B, G, R
  return {static_cast<double>(f.area_px),
          f.perimeter_px,
          f.upper_thickness_mean,
          f.lower_thickness_mean,
          f.curvature_mean,
          f.symmetry,
          c[2].mean - c[1].mean,
          (c[0].mean + c[1].mean + c[2].mean) / 3.0};
}

FrameFeatures extract_frame(const cv::Mat& image, const LandmarkFrame& frame,
                            const ExtractOptions& options) {
  FrameFeatures out;
  out.mouth = ingest::extract_mouth(frame);
  const LipContour contour = geometry::fit_contour(out.mouth, options.fit);
  const LipRoi roi = ingest::crop_normalize(image, out.mouth, contour, options.crop);
  out.transform = roi.transform;
  out.shape = shape_vector(geometry::static_features(roi));

  const texture::SixRegions regions = texture::split_regions(roi);
  try {
    out.texture = texture::frame_texture(roi, regions, options.texture);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TooFewPixels) throw;
  }
  out.lines = lipprint::frame_lines(roi, regions, options.preprocess, options.hough,
                                    options.filter);
  return out;
}

RawWindow window_features(std::span<const FrameFeatures> frames, const ExtractOptions& options) {
  if (frames.size() < 2) {
    throw Error(ErrorCode::WindowTooShort, "feature window needs at least 2 frames");
  }
  RawWindow w(raw::kDim, 0.0);
  const double n = static_cast<double>(frames.size());

  for (const auto& f : frames) {
    for (int i = 0; i < kShapeSize; ++i) w[raw::kStatic + i] += f.shape[i] / n;
  }
  w[raw::kFlags + static_cast<int>(Block::Static)] = 1.0;

  int textured = 0;
  for (const auto& f : frames) {
    if (!f.texture) continue;
    ++textured;
    for (int i = 0; i < texture::kRawTextureSize; ++i) w[raw::kTexture + i] += (*f.texture)[i];
  }
  if (textured > 0) {
    for (int i = 0; i < texture::kRawTextureSize; ++i) w[raw::kTexture + i] /= textured;
    w[raw::kFlags + static_cast<int>(Block::Texture)] = 1.0;
  }

  std::vector<lipprint::MotionVectorSet> pairs;
  for (std::size_t k = 1; k < frames.size(); ++k) {
    pairs.push_back(lipprint::match_motion(frames[k - 1].lines, frames[k].lines, options.match));
  }
  const lipprint::WindowMotion motion = lipprint::summarize_motion(pairs);
  if (motion.present) {
    std::copy(motion.values.begin(), motion.values.end(), w.begin() + raw::kMotion);
    w[raw::kFlags + static_cast<int>(Block::Motion)] = 1.0;
  }

  std::vector<MouthLandmarks> mouths;
  for (const auto& f : frames) mouths.push_back(f.mouth);
  const auto traj = articulator::build_trajectories(mouths, frames.front().transform);
  const auto corr = articulator::correlation_matrix(traj);
  const auto open = articulator::openness(mouths, options.openness_t1, options.openness_t2);
  const auto block = articulator::articulator_block(corr, open);
  std::copy(block.begin(), block.end(), w.begin() + raw::kArticulator);
  w[raw::kFlags + static_cast<int>(Block::Articulator)] = 1.0;
  return w;
}

std::vector<RawWindow> sliding_windows(std::span<const FrameFeatures> frames,
                                       const ExtractOptions& options) {
  std::vector<RawWindow> out;
  const std::size_t len = static_cast<std::size_t>(options.window);
  const std::size_t stride = static_cast<std::size_t>(options.stride);
  for (std::size_t start = 0; start + len <= frames.size(); start += stride) {
    out.push_back(window_features(frames.subspan(start, len), options));
  }
  return out;
}

std::vector<FrameFeatures> extract_sequence(std::span<const LandmarkFrame> frames,
                                            const std::filesystem::path& image_root,
                                            const ExtractOptions& options) {
  std::vector<FrameFeatures> out;
  out.reserve(frames.size());
  for (const auto& f : frames) {
    if (!f.image_ref) {
      throw Error(ErrorCode::IoFailure,
                  "frame " + std::to_string(f.frame_index) + " has no image reference");
    }
    const cv::Mat3b image = ingest::read_frame(image_root / *f.image_ref);
    out.push_back(extract_frame(image, f, options));
  }
  return out;
}

// --- Feature windows file ----------------------------------------------------

namespace {
constexpr char kMagic[8] = {'L', 'I', 'P', 'F', 'E', 'A', 'T', '1'};
constexpr std::uint32_t kFormatVersion = 1;
}  // namespace

void write_feature_file(const std::filesystem::path& path, const FeatureFile& file) {
  detail::ByteWriter w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(file.dimension));
  w.u64(file.rows.size());
  w.u64(file.schema);
  w.str(file.subject);
  for (const auto& row : file.rows) {
    if (static_cast<int>(row.size()) != file.dimension) {
      throw Error(ErrorCode::DimensionMismatch, "feature row has wrong dimension");
    }
    for (double v : row) w.f64(v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(w.bytes().data()),
            static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

FeatureReader::FeatureReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary) {
  if (!in_) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::uint8_t head[8 + 4 + 4 + 8 + 8 + 4];
  if (!in_.read(reinterpret_cast<char*>(head), sizeof head)) {
    throw Error(ErrorCode::MalformedRecord, "truncated feature file header");
  }
  if (!std::equal(kMagic, kMagic + 8, reinterpret_cast<const char*>(head))) {
    throw Error(ErrorCode::MalformedRecord, "not a feature windows file");
  }
  detail::ByteReader r(head + 8, sizeof head - 8);
  if (r.u32() != kFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "unsupported feature file version");
  }
  dimension_ = static_cast<int>(r.u32());
  count_ = r.u64();
  schema_ = r.u64();
  const std::uint32_t len = r.u32();
  subject_.resize(len);
  if (len > 0 && !in_.read(subject_.data(), len)) {
    throw Error(ErrorCode::MalformedRecord, "truncated subject id");
  }
}

bool FeatureReader::next(RawWindow& row) {
  if (read_ >= count_) return false;
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(dimension_) * 8);
  if (!in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
    throw Error(ErrorCode::MalformedRecord, "truncated feature row " + std::to_string(read_));
  }
  detail::ByteReader r(buf.data(), buf.size());
  row.resize(static_cast<std::size_t>(dimension_));
  for (double& v : row) v = r.f64();
  ++read_;
  return true;
}

FeatureFile read_feature_file(const std::filesystem::path& path) {
  FeatureReader reader(path);
  FeatureFile file;
  file.subject = reader.subject();
  file.schema = reader.schema();
  file.dimension = reader.dimension();
  RawWindow row;
  while (reader.next(row)) file.rows.push_back(row);
  return file;
}

}  // namespace lipdyn::features
