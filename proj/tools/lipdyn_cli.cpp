#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lipdyn/config.hpp"
#include "lipdyn/error.hpp"
#include "lipdyn/eval.hpp"
#include "lipdyn/ingest.hpp"
#include "lipdyn/synth.hpp"
#include "lipdyn/verifier.hpp"
#include "lipdyn/window_features.hpp"

namespace fs = std::filesystem;
using namespace lipdyn;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

void emit(const std::optional<fs::path>& path, const std::string& text) {
  if (path) {
    write_text(*path, text);
  } else {
    std::cout << text;
  }
}

int run_extract(const Config& cfg, const fs::path& landmarks, std::optional<fs::path> frames_root,
                const std::string& subject, const fs::path& out) {
  const auto frames = ingest::parse_landmark_file(landmarks);
  const fs::path root = frames_root.value_or(landmarks.parent_path());
  const auto per_frame = features::extract_sequence(frames, root, cfg.extract);
  features::FeatureFile file;
  file.subject = subject;
  file.schema = features::schema_hash(cfg.extract);
  file.rows = features::sliding_windows(per_frame, cfg.extract);
  features::write_feature_file(out, file);
  std::cerr << "extracted " << file.rows.size() << " windows from " << frames.size()
            << " frames\n";
  return 0;
}

std::vector<features::FeatureFile> read_features(const std::vector<fs::path>& paths) {
  std::vector<features::FeatureFile> files;
  for (const auto& p : paths) {
    files.push_back(features::read_feature_file(p));
    if (files.back().schema != files.front().schema) {
      throw Error(ErrorCode::VersionMismatch,
                  p.string() + " was extracted with different options");
    }
  }
  return files;
}

int run_train(const Config& cfg, const std::vector<fs::path>& inputs, const fs::path& out) {
  const auto files = read_features(inputs);
  std::vector<std::size_t> counts;
  for (const auto& f : files) counts.push_back(f.rows.size());
  const bool split = std::all_of(counts.begin(), counts.end(), [&](std::size_t n) {
    return n >= static_cast<std::size_t>(cfg.folds);
  });
  std::vector<std::vector<int>> folds;
  if (split) folds = eval::assign_folds(counts, cfg.folds, cfg.seed);

  std::vector<verifier::LabeledWindows> train, validation;
  for (std::size_t s = 0; s < files.size(); ++s) {
    verifier::LabeledWindows tr{files[s].subject, {}}, va{files[s].subject, {}};
    for (std::size_t w = 0; w < files[s].rows.size(); ++w) {
      (split && folds[s][w] == 0 ? va : tr).windows.push_back(files[s].rows[w]);
    }
    train.push_back(std::move(tr));
    if (!va.windows.empty()) validation.push_back(std::move(va));
  }
  const auto ec = cfg.eval_config();
  auto model = verifier::fit_model(train, validation, ec.network, ec.training);
  model.schema = files.front().schema;
  verifier::save_model(out, model);
  std::cout << "model_version = " << model.version() << "\n";
  std::cout << "threshold = " << fmt(model.threshold) << "\n";
  std::cout << "train_loss = " << fmt(model.train_loss) << "\n";
  if (model.validation_loss) std::cout << "validation_loss = " << fmt(*model.validation_loss) << "\n";
  return 0;
}

void check_schema(const verifier::SiameseModel& model, std::uint64_t schema) {
  if (model.schema != schema) {
    throw Error(ErrorCode::VersionMismatch,
                "features were extracted with options that differ from the model's");
  }
}

int run_enroll(const fs::path& model_path, const fs::path& features_path, const fs::path& out,
               std::optional<double> threshold) {
  const auto model = verifier::load_model(model_path);
  const auto file = features::read_feature_file(features_path);
  check_schema(model, file.schema);
  const auto tpl = verifier::enroll(model, file.subject, file.rows, threshold);
  verifier::save_template(out, tpl);
  std::cout << "enrolled " << tpl.subject << " windows=" << tpl.gallery.size()
            << " threshold=" << fmt(tpl.threshold) << "\n";
  return 0;
}

int run_verify(const Config& cfg, const fs::path& model_path, const fs::path& template_path,
               const fs::path& features_path, bool smooth) {
  const auto model = verifier::load_model(model_path);
  const auto tpl = verifier::load_template(template_path);
  if (tpl.model_version != model.version()) {
    throw Error(ErrorCode::VersionMismatch, "template was enrolled with model " +
                                                tpl.model_version + ", not " + model.version());
  }
  features::FeatureReader reader(features_path);
  check_schema(model, reader.schema());
  verifier::DecisionSmoother smoother(static_cast<std::size_t>(cfg.smooth_window));
  features::RawWindow row;
  while (reader.next(row)) {
    const auto d = verifier::verify_embedding(tpl, verifier::embed(model, row));
    std::cout << (d.accept ? "accept " : "reject ") << fmt(d.score);
    if (smooth) std::cout << (smoother.push(d.accept) ? " smoothed=accept" : " smoothed=reject");
    std::cout << '\n' << std::flush;
  }
  return 0;
}

int run_evaluate(const Config& cfg, const fs::path& dataset, const std::optional<fs::path>& out,
                 const std::optional<fs::path>& pr_out, bool with_attacks) {
  const auto data = eval::load_dataset(dataset, cfg.extract);
  auto ec = cfg.eval_config();
  if (with_attacks) {
    ec.attacks = {eval::Scenario::Mimic, eval::Scenario::StaticPhoto, eval::Scenario::Deepfake};
  }
  const auto report = eval::kfold(data, ec, cfg.extract);
  std::ostringstream text;
  eval::write_report(text, report);
  emit(out, text.str());
  if (pr_out) {
    std::ostringstream pts;
    eval::write_pr_points(pts, report.pr);
    write_text(*pr_out, pts.str());
  }
  return 0;
}

int run_attack(const Config& cfg, const fs::path& dataset, const std::string& scenario,
               const std::optional<fs::path>& out) {
  const auto s = eval::parse_scenario(scenario);
  const auto data = eval::load_dataset(dataset, cfg.extract);
  const auto r = eval::run_attack(data, cfg.eval_config(), s, cfg.extract);
  std::ostringstream text;
  eval::write_attack_report(text, r);
  emit(out, text.str());
  return 0;
}

int run_synth(const Config& cfg, const fs::path& out) {
  synth::SynthOptions o = cfg.synth;
  o.window = cfg.extract.window;
  o.stride = cfg.extract.stride;
  o.seed = cfg.seed;
  const auto entries = synth::generate(out, o);
  std::cout << "subjects = " << entries.size() << "\n";
  std::cout << "frames_per_subject = " << synth::frame_count(o) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic lip biometrics: feature extraction, verification and evaluation"};
  app.set_version_flag("--version", "lipdyn 1.0");
  std::optional<fs::path> config_path;
  bool dump = false;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "Config file of key = value lines")->check(CLI::ExistingFile);
  app.add_flag("--dump-config", dump, "Print the effective config and exit");
  app.add_option("--seed", seed, "Seed for every randomized step");

  auto* extract = app.add_subcommand("extract", "Landmarks and frames to a feature windows file");
  fs::path lmk, feat_out;
  std::optional<fs::path> frames_root;
  std::string subject;
  extract->add_option("--landmarks", lmk, "Landmark .lmk.jsonl file")->required();
  extract->add_option("--frames-root", frames_root, "Directory image paths resolve against");
  extract->add_option("--subject", subject, "Subject id stored in the output")->required();
  extract->add_option("--out", feat_out, "Output feature windows file")->required();

  auto* train = app.add_subcommand("train", "Feature windows files to a model");
  std::vector<fs::path> train_inputs;
  fs::path model_out;
  train->add_option("--features", train_inputs, "One feature file per subject")->required();
  train->add_option("--out", model_out, "Output model file")->required();

  auto* enroll = app.add_subcommand("enroll", "Model and subject features to a template");
  fs::path model_in, enroll_features, template_out;
  std::optional<double> threshold;
  enroll->add_option("--model", model_in)->required();
  enroll->add_option("--features", enroll_features)->required();
  enroll->add_option("--out", template_out)->required();
  enroll->add_option("--threshold", threshold, "Override the model's threshold");

  auto* verify = app.add_subcommand("verify", "Stream decisions for a feature windows file");
  fs::path verify_model, verify_template, verify_features;
  bool smooth = false;
  verify->add_option("--model", verify_model)->required();
  verify->add_option("--template", verify_template)->required();
  verify->add_option("--features", verify_features)->required();
  verify->add_flag("--smooth", smooth, "Append the majority decision over recent windows");

  auto* evaluate = app.add_subcommand("evaluate", "Cross-validated report on a dataset");
  fs::path eval_dataset;
  std::optional<fs::path> eval_out, pr_out;
  bool with_attacks = false;
  evaluate->add_option("--dataset", eval_dataset, "Directory with manifest.txt")->required();
  evaluate->add_option("--out", eval_out, "Report file (default stdout)");
  evaluate->add_option("--pr-out", pr_out, "Precision-recall points file");
  evaluate->add_flag("--attacks", with_attacks, "Also run the three attack scenarios");

  auto* attack = app.add_subcommand("attack", "Attack success rate on a dataset");
  fs::path attack_dataset;
  std::string scenario;
  std::optional<fs::path> attack_out;
  attack->add_option("--dataset", attack_dataset)->required();
  attack->add_option("--scenario", scenario)
      ->required()
      ->check(CLI::IsMember({"mimic", "static", "deepfake"}));
  attack->add_option("--out", attack_out, "Report file (default stdout)");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  fs::path synth_out;
  synth->add_option("--out", synth_out, "Output directory")->required();

  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e, std::cout, std::cerr);
    return status == 0 ? 0 : 1;
  }

  try {
    Config cfg = config_path ? load_config(*config_path) : Config{};
    if (seed) cfg.seed = *seed;
    validate(cfg);
    if (dump) {
      std::cout << dump_config(cfg);
      return 0;
    }
    if (*extract) return run_extract(cfg, lmk, frames_root, subject, feat_out);
    if (*train) return run_train(cfg, train_inputs, model_out);
    if (*enroll) return run_enroll(model_in, enroll_features, template_out, threshold);
    if (*verify) return run_verify(cfg, verify_model, verify_template, verify_features, smooth);
    if (*evaluate) return run_evaluate(cfg, eval_dataset, eval_out, pr_out, with_attacks);
    if (*attack) return run_attack(cfg, attack_dataset, scenario, attack_out);
    if (*synth) return run_synth(cfg, synth_out);
    std::cerr << "error code=Usage message=\"a subcommand is required\"\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << e.diagnostic() << '\n';
    return exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error code=Internal message=\"" << e.what() << "\"\n";
    return 2;
  }
}
