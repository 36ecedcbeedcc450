#pragma once

#include <filesystem>
#include <istream>
#include <string>

#include "lipdyn/eval.hpp"
#include "lipdyn/siamese.hpp"
#include "lipdyn/synth.hpp"
#include "lipdyn/window_features.hpp"

namespace lipdyn {

/// Every tunable, with module defaults.
struct Config {
  features::ExtractOptions extract;
  verifier::NetworkConfig network;
  verifier::TrainConfig training;
  int folds = 10;
  bool subject_disjoint = false;
  std::uint64_t seed = 7;
  std::size_t pr_steps = 0;
  double deepfake_alpha = 1.0;
  int smooth_window = 5;
  synth::SynthOptions synth;

  eval::EvalConfig eval_config() const;
};

/// Throws InvalidConfig naming the offending key.
void validate(const Config& config);

/// `key = value` lines, one per field, in a fixed order.
std::string dump_config(const Config& config);

/// Starts from defaults and applies each `key = value` line; '#' starts a
/// comment. Throws InvalidConfig with the line number.
Config parse_config(std::istream& in);
Config load_config(const std::filesystem::path& path);

}  // namespace lipdyn
