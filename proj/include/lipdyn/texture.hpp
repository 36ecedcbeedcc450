#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "lipdyn/types.hpp"

namespace lipdyn::texture {

// --- Six lip regions -------------------------------------------------------

enum class Region { UL = 0, UM, UR, LL, LM, LR };
inline constexpr int kRegionCount = 6;
std::string_view region_name(Region r);

struct SixRegions {
  std::array<cv::Rect, kRegionCount> rects;  // indexed by Region
  cv::Rect bounds;                            // tiled mask bounding box
  cv::Mat1b valid;                            // lip mask; 0 = ignored

  const cv::Rect& rect(Region r) const { return rects[static_cast<int>(r)]; }
  /// Region whose rectangle contains `p`; points outside the bounding box
  /// are clamped onto it first.
  Region locate(cv::Point2d p) const;
};

/// Tiles the mask bounding box: upper/lower split at the corner midline row,
/// three vertical bands with the leftmost taking the width remainder.
/// Throws EmptyMask.
SixRegions split_regions(const cv::Mat1b& mask, cv::Point2d left_corner,
                         cv::Point2d right_corner);
SixRegions split_regions(const LipRoi& roi);

// --- G2 steerable filter ---------------------------------------------------

inline constexpr int kOrientationCount = 8;
inline constexpr double kOrientationStep = 22.5;

/// Responses to the three separable second-derivative-of-Gaussian basis
/// kernels Gxx, Gxy, Gyy (unit-mass Gaussian, support +-ceil(3 sigma),
/// reflect-101 border). The kernel DC is removed at the center tap, so
/// constant images map to exactly zero.
struct SteerableBasis {
  cv::Mat1d xx, xy, yy;
};

int steerable_radius(double sigma);
SteerableBasis steerable_basis(const cv::Mat& gray, double sigma = 2.0);

/// Second directional derivative along (cos a, sin a), image axes (y down):
/// cos^2 a Gxx + 2 cos a sin a Gxy + sin^2 a Gyy.
cv::Mat1d steer(const SteerableBasis& basis, double orientation_deg);
cv::Mat1d steerable_response(const cv::Mat& gray, double orientation_deg,
                             double sigma = 2.0);

// --- GLCM ------------------------------------------------------------------

struct GlcmOptions {
  int levels = 16;
  int distance = 1;
};

/// Symmetric, normalized co-occurrence matrix of horizontal pixel pairs at
/// `distance` inside `rect`, skipping pixels where `valid` is zero (an empty
/// `valid` accepts everything). Values are quantized over the region's
/// min-max range. Throws TooFewPixels when fewer than 2 pairs exist.
cv::Mat1d glcm(const cv::Mat1d& response, const cv::Rect& rect,
               const cv::Mat1b& valid, const GlcmOptions& options = {});

enum GlcmStat { kAsm = 0, kContrast, kCorrelation, kIdm, kEntropy };
inline constexpr int kGlcmStatCount = 5;
using GlcmStats = std::array<double, kGlcmStatCount>;

/// ASM, contrast, correlation, inverse difference moment, entropy (bits).
/// Throws NotNormalized when the matrix does not sum to 1.
GlcmStats glcm_stats(const cv::Mat1d& p);

/// Per-frame raw texture: [region][stat][orientation] flattened, 240 values.
inline constexpr int kRawTextureSize = kRegionCount * kGlcmStatCount * kOrientationCount;
inline constexpr int kTextureBlockSize = kRegionCount * kGlcmStatCount * 2;

struct TextureOptions {
  double sigma = 2.0;
  GlcmOptions glcm;
};

std::array<double, kRawTextureSize> frame_texture(const LipRoi& roi,
                                                  const SixRegions& regions,
                                                  const TextureOptions& options = {});

// --- PCA -------------------------------------------------------------------

/// Top-two principal axes of a set of 8-vectors.
struct PcaBasis {
  std::array<double, kOrientationCount> mean{};
  std::array<std::array<double, kOrientationCount>, 2> components{};
  std::array<double, 2> variance{};
  bool rank_deficient = false;

  std::array<double, 2> apply(std::span<const double, kOrientationCount> v) const;
};

/// Needs at least 3 vectors (InsufficientData). A zero covariance yields a
/// rank-deficient basis whose projection is always zero.
PcaBasis pca_fit(std::span<const std::array<double, kOrientationCount>> training);

/// One PCA basis per (region, stat) pair, fitted on training windows only.
struct TextureProjection {
  std::array<PcaBasis, kRegionCount * kGlcmStatCount> bases;

  static TextureProjection fit(std::span<const std::array<double, kRawTextureSize>> raw);
  /// 60 values laid out [region][stat][component].
  std::array<double, kTextureBlockSize> apply(std::span<const double, kRawTextureSize> raw) const;
  bool any_rank_deficient() const;
};

}  // namespace lipdyn::texture
