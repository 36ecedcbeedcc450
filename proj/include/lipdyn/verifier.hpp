#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lipdyn/siamese.hpp"
#include "lipdyn/texture.hpp"
#include "lipdyn/window_features.hpp"

namespace lipdyn::verifier {

// Assembled vector layout: static, texture (PCA), motion, articulator, then
// one presence flag per block.
namespace layout {
inline constexpr int kStatic = 0;
inline constexpr int kTexture = kStatic + features::kShapeSize;
inline constexpr int kMotion = kTexture + texture::kTextureBlockSize;
inline constexpr int kArticulator = kMotion + lipprint::kMotionBlockSize;
inline constexpr int kFeatures = kArticulator + articulator::kArticulatorBlockSize;
inline constexpr int kFlags = kFeatures;
inline constexpr int kDim = kFlags + features::kBlockCount;
}  // namespace layout

using WindowVector = std::vector<double>;

/// Per-dimension training statistics for the non-flag dimensions.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// Maps a raw window to its unnormalized assembled form (PCA applied,
/// absent blocks zero). Throws DimensionMismatch, InsufficientData when the
/// static or articulator block is missing.
WindowVector project(std::span<const double> raw, const texture::TextureProjection& pca);

/// Statistics over blocks that are present; a std below 1e-12 becomes 1.
Normalization fit_normalization(std::span<const WindowVector> projected);

/// z-scores present blocks; absent blocks stay zero, flags stay 0/1.
WindowVector normalize(std::span<const double> projected, const Normalization& norm);

/// PCA bases fitted on the texture blocks of the windows that have one.
texture::TextureProjection fit_texture_projection(std::span<const features::RawWindow> raw);

struct SiameseModel {
  NetworkConfig network;
  TrainConfig training;
  SiameseNetwork net{network};
  texture::TextureProjection pca;
  Normalization norm;
  std::uint64_t schema = 0;  // feature extraction schema the model was trained on
  double threshold = 0.0;    // chosen on validation distances at training time
  double train_loss = 0.0;
  std::optional<double> validation_loss;

  /// Hex digest of the serialized model contents.
  std::string version() const;
};

/// Raw window -> normalized assembled vector.
WindowVector assemble(const SiameseModel& model, std::span<const double> raw);
std::vector<double> embed(const SiameseModel& model, std::span<const double> raw);

struct Template {
  std::string subject;
  std::vector<std::vector<double>> gallery;
  double threshold = 0.0;
  std::string model_version;
  std::size_t enrolled_windows = 0;
};

/// Throws TooFewWindows below 3 windows. Uses the model's threshold unless
/// one is given.
Template enroll(const SiameseModel& model, const std::string& subject,
                std::span<const features::RawWindow> windows,
                std::optional<double> threshold = std::nullopt);

struct OperatingPoint {
  double threshold = 0.0;
  double far = 0.0;
  double frr = 0.0;
  double eer = 0.0;  // (far + frr) / 2
};

/// Equal-error operating point. FAR(t) is the share of impostor distances
/// <= t and FRR(t) the share of genuine distances > t. Among the intervals
/// between sorted distinct scores, the lowest run of consecutive intervals
/// minimizing |FAR - FRR| is chosen and t is its midpoint; an unbounded end
/// is clipped to the extreme score. Throws EmptySet.
OperatingPoint equal_error_point(std::span<const double> genuine,
                                 std::span<const double> impostor);
double choose_threshold(std::span<const double> genuine, std::span<const double> impostor);

struct Decision {
  bool accept = false;
  double score = 0.0;
};

/// Minimum gallery distance; accept iff score <= threshold.
Decision verify_embedding(const Template& tpl, std::span<const double> embedding);
/// Throws VersionMismatch.
Decision verify(const SiameseModel& model, const Template& tpl, std::span<const double> raw);

/// Continuous mode: majority over the most recent `span` decisions.
class DecisionSmoother {
 public:
  explicit DecisionSmoother(std::size_t span = 5) : span_(span) {}
  bool push(bool accept);

 private:
  std::size_t span_;
  std::deque<bool> recent_;
};

// --- Training ----------------------------------------------------------------

struct LabeledWindows {
  std::string subject;
  std::vector<features::RawWindow> windows;
};

/// All same-subject pairs plus as many seeded different-subject pairs.
std::vector<PairIndex> make_pairs(std::span<const int> labels, std::uint64_t seed);

/// Fits PCA and normalization on `train`, trains the network and picks the
/// threshold on `validation` (probe vs per-subject training galleries).
SiameseModel fit_model(std::span<const LabeledWindows> train,
                       std::span<const LabeledWindows> validation, const NetworkConfig& network,
                       const TrainConfig& training);

// --- Persistence -------------------------------------------------------------

void save_model(const std::filesystem::path& path, const SiameseModel& model);
/// Throws IoFailure, MalformedRecord, VersionMismatch, ChecksumMismatch.
SiameseModel load_model(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_model(const SiameseModel& model);
SiameseModel deserialize_model(std::span<const std::uint8_t> bytes);

void save_template(const std::filesystem::path& path, const Template& tpl);
Template load_template(const std::filesystem::path& path);

}  // namespace lipdyn::verifier
