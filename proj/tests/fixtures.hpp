#pragma once

#include <filesystem>
#include <string>

#include <opencv2/core.hpp>

#include "lipdyn/synth.hpp"
#include "lipdyn/types.hpp"

namespace fixture {

/// A resting mouth from the default synthetic subject.
inline lipdyn::LandmarkFrame resting_face(double t = 0.0) {
  lipdyn::synth::SubjectParams p;
  lipdyn::LandmarkFrame f;
  f.points = lipdyn::synth::landmarks_at(p, t, {320, 240});
  return f;
}

inline lipdyn::MouthLandmarks resting_mouth(double t = 0.0) {
  lipdyn::MouthLandmarks m;
  const auto face = resting_face(t);
  for (int k = 0; k < lipdyn::kMouthLandmarkCount; ++k) {
    m.points[k] = face.points[lipdyn::kMouthFirstLandmark + k];
  }
  return m;
}

/// Fresh directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(LIPDYN_SCRATCH) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
