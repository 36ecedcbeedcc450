#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "lipdyn/random.hpp"
#include "lipdyn/types.hpp"

namespace lipdyn::synth {

/// A dark groove drawn across one lip, in lip-parametric coordinates: u runs
/// corner to corner, v from the outer edge (0) to the inner edge (1).
struct Groove {
  bool upper = true;
  double u_outer = 0.5;
  double u_inner = 0.5;
  double v_start = 0.1;
  double v_end = 0.9;
  double darkness = 0.6;  // multiplier on the lip color
  int thickness = 1;
};

struct SubjectParams {
  // Resting geometry in image pixels.
  cv::Point2d center{160.0, 150.0};
  double width = 160.0;
  double bow_depth = 4.0;
  double upper_thickness = 14.0;
  double lower_thickness = 18.0;
  double rest_gap = 3.0;  // inner opening at rest

  // Articulation: each mouth landmark oscillates at the primary frequency
  // with its own gain and phase per axis; the jaw adds a shared opening at
  // the same frequency.
  double frequency_hz = 2.5;
  double jaw_phase = 0.0;
  double open_amplitude = 8.0;
  double secondary_hz = 1.1;
  double secondary_amplitude = 0.8;
  std::array<double, kMouthLandmarkCount> gain_x{};
  std::array<double, kMouthLandmarkCount> gain_y{};
  std::array<double, kMouthLandmarkCount> phase_x{};
  std::array<double, kMouthLandmarkCount> phase_y{};

  // Appearance.
  cv::Vec3d lip_bgr{90.0, 80.0, 170.0};
  cv::Vec3d skin_bgr{140.0, 160.0, 200.0};
  std::vector<Groove> grooves;
  double pixel_noise = 3.0;
};

SubjectParams sample_subject(Rng& rng);

struct SynthOptions {
  int subjects = 10;
  int windows = 20;
  int window = 25;
  int stride = 12;
  double fps = 25.0;
  double landmark_jitter = 0.3;
  int width = 320;
  int height = 240;
  std::uint64_t seed = 1;
};

void validate(const SynthOptions& options);

/// Frames needed for `windows` windows of `window` frames every `stride`.
int frame_count(const SynthOptions& options);

/// Noise-free 68-point layout at time `t_seconds`.
std::array<cv::Point2d, kLandmarkCount> landmarks_at(const SubjectParams& p, double t_seconds,
                                                     cv::Size frame);

cv::Mat3b render_frame(const SubjectParams& p, const std::array<cv::Point2d, kLandmarkCount>& pts,
                       cv::Size frame, Rng& noise);

/// Writes <dir>/<id>/landmarks.lmk.jsonl and <dir>/<id>/frames/NNNNNN.png.
/// Frame images carry per-pixel noise and the landmark file carries
/// detector-like jitter, both drawn from `noise_seed`.
void write_subject(const std::filesystem::path& dir, const std::string& id,
                   const SubjectParams& params, const SynthOptions& options,
                   std::uint64_t noise_seed);

struct DatasetEntry {
  std::string subject;
  std::filesystem::path landmarks;  // relative to the dataset root
};

/// Generates `options.subjects` subjects and a manifest.txt listing
/// `subject<TAB>landmark path` per line.
std::vector<DatasetEntry> generate(const std::filesystem::path& dir, const SynthOptions& options);

std::vector<DatasetEntry> read_manifest(const std::filesystem::path& dir);

}  // namespace lipdyn::synth
