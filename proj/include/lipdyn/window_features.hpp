#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "lipdyn/articulator.hpp"
#include "lipdyn/ingest.hpp"
#include "lipdyn/lip_geometry.hpp"
#include "lipdyn/lipprint.hpp"
#include "lipdyn/texture.hpp"

namespace lipdyn::features {

struct ExtractOptions {
  ingest::CropOptions crop;
  geometry::FitOptions fit;
  texture::TextureOptions texture;
  lipprint::PreprocessOptions preprocess;
  lipprint::HoughOptions hough;
  lipprint::LineFilter filter;
  lipprint::MatchOptions match;
  double openness_t1 = 0.33;
  double openness_t2 = 0.66;
  int window = 25;
  int stride = 12;
};

/// Stable hash of every option that shapes extracted features.
std::uint64_t schema_hash(const ExtractOptions& options);

inline constexpr int kShapeSize = 8;

/// Per-frame results kept for windowing.
struct FrameFeatures {
  MouthLandmarks mouth;
  RoiTransform transform;
  std::array<double, kShapeSize> shape{};
  std::optional<std::array<double, texture::kRawTextureSize>> texture;
  std::vector<lipprint::LineSegment> lines;
};

/// area, perimeter, mean upper/lower thickness, curvature, symmetry,
/// redness (mean R - mean G), brightness (mean of channel means).
std::array<double, kShapeSize> shape_vector(const geometry::StaticShapeFeatures& f);

FrameFeatures extract_frame(const cv::Mat& image, const LandmarkFrame& frame,
                            const ExtractOptions& options = {});

/// Raw (pre-PCA, pre-normalization) window layout.
enum class Block { Static = 0, Texture, Motion, Articulator };
inline constexpr int kBlockCount = 4;

namespace raw {
inline constexpr int kStatic = 0;
inline constexpr int kTexture = kStatic + kShapeSize;
inline constexpr int kMotion = kTexture + texture::kRawTextureSize;
inline constexpr int kArticulator = kMotion + lipprint::kMotionBlockSize;
inline constexpr int kFlags = kArticulator + articulator::kArticulatorBlockSize;
inline constexpr int kDim = kFlags + kBlockCount;
}  // namespace raw

using RawWindow = std::vector<double>;

inline bool block_present(std::span<const double> w, Block b) {
  return w[raw::kFlags + static_cast<int>(b)] != 0.0;
}

/// One raw window from consecutive frames. Throws WindowTooShort.
RawWindow window_features(std::span<const FrameFeatures> frames,
                          const ExtractOptions& options = {});

/// Sliding windows of `options.window` frames every `options.stride` frames.
std::vector<RawWindow> sliding_windows(std::span<const FrameFeatures> frames,
                                       const ExtractOptions& options = {});

/// Runs extract_frame over a landmark sequence, resolving each record's
/// image reference against `image_root`.
std::vector<FrameFeatures> extract_sequence(std::span<const LandmarkFrame> frames,
                                            const std::filesystem::path& image_root,
                                            const ExtractOptions& options = {});

// --- Feature windows file ----------------------------------------------------
//
// Little-endian binary: magic "LIPFEAT1", u32 format version, u32 dimension,
// u64 count, u64 schema hash, u32 subject length + UTF-8 subject id, then
// count x dimension float64 values, row-major.

struct FeatureFile {
  std::string subject;
  std::uint64_t schema = 0;
  int dimension = raw::kDim;
  std::vector<RawWindow> rows;
};

void write_feature_file(const std::filesystem::path& path, const FeatureFile& file);
FeatureFile read_feature_file(const std::filesystem::path& path);

/// Incremental reader for streaming verification.
class FeatureReader {
 public:
  explicit FeatureReader(const std::filesystem::path& path);
  const std::string& subject() const { return subject_; }
  std::uint64_t schema() const { return schema_; }
  int dimension() const { return dimension_; }
  std::uint64_t count() const { return count_; }
  /// False once every row has been read.
  bool next(RawWindow& row);

 private:
  std::ifstream in_;
  std::string subject_;
  std::uint64_t schema_ = 0;
  int dimension_ = 0;
  std::uint64_t count_ = 0;
  std::uint64_t read_ = 0;
};

}  // namespace lipdyn::features
