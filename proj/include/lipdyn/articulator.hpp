#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <opencv2/core.hpp>

#include "lipdyn/types.hpp"

namespace lipdyn::articulator {

/// Landmark-by-frame coordinate matrices (20 x n).
struct TrajectoryMatrix {
  cv::Mat1d x;
  cv::Mat1d y;
  int frames() const { return x.cols; }
};

/// Row i, column k holds landmark i at frame k, mapped through `frame_map`
/// (one map for the whole window). Throws WindowTooShort below 2 frames.
TrajectoryMatrix build_trajectories(std::span<const MouthLandmarks> frames,
                                    const RoiTransform& frame_map = {});

/// Pearson correlation between every pair of rows. A constant row
/// correlates 0 with everything, itself included.
cv::Mat1d row_correlation(const cv::Mat1d& rows);

struct CorrelationFeatures {
  cv::Mat1d rx;
  cv::Mat1d ry;
};

CorrelationFeatures correlation_matrix(const TrajectoryMatrix& traj);

enum class Openness { Small = 0, Medium = 1, Large = 2 };
std::string_view openness_name(Openness o);

/// Largest vertical gap between the fitted inner-upper (60..64) and
/// inner-lower (64..67, 60) lip curves; 0 for a closed mouth.
double mouth_height(const MouthLandmarks& mouth);

struct OpennessSeries {
  std::vector<double> height;
  std::vector<Openness> level;
  std::array<double, 3> histogram{};  // small, medium, large proportions
};

/// Heights normalized by the window maximum; small below t1, medium below
/// t2, large otherwise.
OpennessSeries openness(std::span<const MouthLandmarks> frames, double t1 = 0.33,
                        double t2 = 0.66);

struct PhonemeEntry {
  std::string symbol;  // ASCII (TIPA-style) transcription, e.g. "A:"
  std::string ipa;     // Unicode IPA
  Openness level;
};

/// Built-in vowel table (20 entries).
const std::vector<PhonemeEntry>& phoneme_table();

/// Tab-separated `symbol ipa level` lines; '#' starts a comment.
std::vector<PhonemeEntry> load_phoneme_table(const std::filesystem::path& path);

/// Accepts the ASCII or IPA form, with or without surrounding slashes.
/// Throws UnknownPhoneme.
Openness phoneme_category(std::string_view phoneme);

/// Strict upper triangles of Rx and Ry (190 each) then the openness histogram.
inline constexpr int kCorrelationPairs = kMouthLandmarkCount * (kMouthLandmarkCount - 1) / 2;
inline constexpr int kArticulatorBlockSize = 2 * kCorrelationPairs + 3;

std::array<double, kArticulatorBlockSize> articulator_block(const CorrelationFeatures& corr,
                                                           const OpennessSeries& open);

}  // namespace lipdyn::articulator
