#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lipdyn/siamese.hpp"
#include "lipdyn/verifier.hpp"
#include "lipdyn/window_features.hpp"

namespace lipdyn::eval {

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  Confusion& operator+=(const Confusion& o);
};

/// Ratios with a zero denominator are absent rather than 0.
struct Metrics {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

/// Throws EmptyInput.
Metrics metrics(const Confusion& c);

struct Trial {
  bool accepted = false;
  bool genuine = false;
};

Confusion tally(std::span<const Trial> trials);

struct PrPoint {
  std::optional<double> precision;
  double recall = 0.0;
  double threshold = 0.0;
};

/// Accept iff distance <= threshold, genuine is the positive class. The
/// threshold sweeps the sorted distinct scores; `steps` > 0 keeps at most
/// that many evenly spaced points, always including the largest score.
/// Throws EmptySet.
std::vector<PrPoint> pr_curve(std::span<const double> genuine, std::span<const double> impostor,
                              std::size_t steps = 0);

struct Summary {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;  // population
  std::size_t count = 0;
};

Summary summarize(std::span<const double> values);

/// Window-level stratified folds: each subject's windows are shuffled with a
/// seeded generator and dealt round-robin. Result[s][w] is the fold of
/// window w of subject s. Throws InsufficientData below k windows.
std::vector<std::vector<int>> assign_folds(std::span<const std::size_t> windows_per_subject,
                                           int k, std::uint64_t seed);

/// Subject-level folds. Throws InsufficientData below k subjects.
std::vector<int> assign_subject_folds(std::size_t subjects, int k, std::uint64_t seed);

// --- Dataset -------------------------------------------------------------------

struct SubjectData {
  std::string id;
  std::vector<features::FrameFeatures> frames;
  std::vector<features::RawWindow> windows;
  std::vector<std::size_t> window_starts;  // first frame of each window
};

/// Extracts every subject listed in `dir`/manifest.txt.
std::vector<SubjectData> load_dataset(const std::filesystem::path& dir,
                                      const features::ExtractOptions& options = {});

enum class Scenario { Mimic, StaticPhoto, Deepfake };
Scenario parse_scenario(const std::string& name);  // InvalidConfig
std::string scenario_name(Scenario s);

struct EvalConfig {
  int folds = 10;
  bool subject_disjoint = false;
  std::uint64_t seed = 7;
  std::size_t pr_steps = 0;
  verifier::NetworkConfig network;
  verifier::TrainConfig training;
  std::vector<Scenario> attacks;  // measured on each fold's test windows
  double deepfake_alpha = 1.0;
};

void validate(const EvalConfig& config);

struct FoldResult {
  Confusion confusion;
  Metrics metrics;
  double threshold = 0.0;
  double eer = 0.0;
  double train_loss = 0.0;
  std::optional<double> validation_loss;
  std::vector<double> genuine;   // test distances
  std::vector<double> impostor;
};

struct AttackResult {
  std::string scenario;
  double control_accept = 0.0;  // genuine probes accepted
  double success = 0.0;         // attack probes accepted
  std::size_t control_trials = 0;
  std::size_t attack_trials = 0;
};

struct EvalReport {
  EvalConfig config;
  std::vector<FoldResult> folds;
  Confusion pooled;
  std::vector<PrPoint> pr;
  std::vector<AttackResult> attacks;

  Summary summary(const std::string& metric) const;  // accuracy/precision/recall/f1/eer
};

/// k-fold protocol: per fold, train on k-2 folds, pick the threshold on the
/// validation fold, test on the remaining fold against every subject's
/// template. Attack legs reuse each fold's model and test windows; the
/// control leg is the genuine test acceptance. Throws InsufficientData.
EvalReport kfold(std::span<const SubjectData> data, const EvalConfig& config,
                 const features::ExtractOptions& options = {});

/// Key-value text; every line is `key = value`.
void write_report(std::ostream& out, const EvalReport& report);
/// One `threshold precision recall` line per point; absent precision is `-`.
void write_pr_points(std::ostream& out, std::span<const PrPoint> points);

// --- Attacks -------------------------------------------------------------------

struct Probe {
  std::string subject;
  std::vector<double> embedding;
};

/// Share of probes from other subjects accepted by each template.
double impostor_success(std::span<const verifier::Template> templates,
                        std::span<const Probe> probes);
/// Share of probes accepted by their own subject's template.
double genuine_accept(std::span<const verifier::Template> templates,
                      std::span<const Probe> probes);

/// One frame repeated for a whole window, run through the window pipeline.
features::RawWindow static_photo_window(const features::FrameFeatures& frame, int length,
                                        const features::ExtractOptions& options = {});

/// Target appearance (static, texture) with dynamics (motion, articulator)
/// blended toward the attacker by `alpha`; alpha = 1 swaps them fully.
features::RawWindow deepfake_window(std::span<const double> target,
                                    std::span<const double> attacker, double alpha);


/// Cross-validated attack: kfold with only `scenario` enabled.
AttackResult run_attack(std::span<const SubjectData> data, const EvalConfig& config,
                        Scenario scenario, const features::ExtractOptions& options = {});

void write_attack_report(std::ostream& out, const AttackResult& result);

}  // namespace lipdyn::eval
