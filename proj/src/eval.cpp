#include "lipdyn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lipdyn/error.hpp"
#include "lipdyn/ingest.hpp"
#include "lipdyn/random.hpp"
#include "lipdyn/synth.hpp"

namespace lipdyn::eval {

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

Metrics metrics(const Confusion& c) {
  if (c.total() == 0) throw Error(ErrorCode::EmptyInput, "no decisions to score");
  Metrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

Confusion tally(std::span<const Trial> trials) {
  Confusion c;
  for (const auto& t : trials) {
    if (t.genuine) {
      (t.accepted ? c.tp : c.fn) += 1;
    } else {
      (t.accepted ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

std::vector<PrPoint> pr_curve(std::span<const double> genuine, std::span<const double> impostor,
                              std::size_t steps) {
  if (genuine.empty() || impostor.empty()) {
    throw Error(ErrorCode::EmptySet, "precision-recall needs genuine and impostor scores");
  }
  std::vector<double> g(genuine.begin(), genuine.end());
  std::vector<double> im(impostor.begin(), impostor.end());
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  std::vector<double> cuts;
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(cuts));
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<std::size_t> keep;
  if (steps == 0 || cuts.size() <= steps) {
    for (std::size_t i = 0; i < cuts.size(); ++i) keep.push_back(i);
  } else if (steps == 1) {
    keep.push_back(cuts.size() - 1);
  } else {
    for (std::size_t i = 0; i < steps; ++i) {
      keep.push_back((i * (cuts.size() - 1) + (steps - 1) / 2) / (steps - 1));
    }
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  }

  std::vector<PrPoint> out;
  out.reserve(keep.size());
  for (std::size_t i : keep) {
    const double t = cuts[i];
    const auto tp = static_cast<double>(std::upper_bound(g.begin(), g.end(), t) - g.begin());
    const auto fp = static_cast<double>(std::upper_bound(im.begin(), im.end(), t) - im.begin());
    PrPoint p;
    p.threshold = t;
    p.recall = tp / static_cast<double>(g.size());
    if (tp + fp > 0.0) p.precision = tp / (tp + fp);
    out.push_back(p);
  }
  return out;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  const std::size_t mid = v.size() / 2;
  s.median = v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(v.size()));
  return s;
}

std::vector<std::vector<int>> assign_folds(std::span<const std::size_t> windows_per_subject,
                                           int k, std::uint64_t seed) {
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "fold count must be positive");
  std::vector<std::vector<int>> folds;
  for (std::size_t s = 0; s < windows_per_subject.size(); ++s) {
    const std::size_t n = windows_per_subject[s];
    if (n < static_cast<std::size_t>(k)) {
      throw Error(ErrorCode::InsufficientData, "subject " + std::to_string(s) + " has " +
                                                   std::to_string(n) + " windows, fewer than " +
                                                   std::to_string(k) + " folds");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed * 0x9e3779b97f4a7c15ULL + s);
    rng.shuffle(order);
    std::vector<int> fold(n);
    for (std::size_t pos = 0; pos < n; ++pos) fold[order[pos]] = static_cast<int>(pos % k);
    folds.push_back(std::move(fold));
  }
  return folds;
}

std::vector<int> assign_subject_folds(std::size_t subjects, int k, std::uint64_t seed) {
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "fold count must be positive");
  if (subjects < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::InsufficientData, "fewer subjects than folds");
  }
  std::vector<std::size_t> order(subjects);
  for (std::size_t i = 0; i < subjects; ++i) order[i] = i;
  Rng rng(seed ^ 0xd1b54a32d192ed03ULL);
  rng.shuffle(order);
  std::vector<int> fold(subjects);
  for (std::size_t pos = 0; pos < subjects; ++pos) fold[order[pos]] = static_cast<int>(pos % k);
  return fold;
}

std::vector<SubjectData> load_dataset(const std::filesystem::path& dir,
                                      const features::ExtractOptions& options) {
  std::vector<SubjectData> out;
  for (const auto& entry : synth::read_manifest(dir)) {
    const auto path = dir / entry.landmarks;
    const auto frames = ingest::parse_landmark_file(path);
    SubjectData s;
    s.id = entry.subject;
    s.frames = features::extract_sequence(frames, path.parent_path(), options);
    s.windows = features::sliding_windows(s.frames, options);
    for (std::size_t i = 0; i < s.windows.size(); ++i) {
      s.window_starts.push_back(i * static_cast<std::size_t>(options.stride));
    }
    out.push_back(std::move(s));
  }
  return out;
}

void validate(const EvalConfig& c) {
  if (c.folds < 3) throw Error(ErrorCode::InvalidConfig, "need at least 3 folds");
  if (!(c.deepfake_alpha >= 0.0 && c.deepfake_alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "blend alpha must be in [0, 1]");
  }
  verifier::validate(c.network);
  verifier::validate(c.training);
}

Summary EvalReport::summary(const std::string& metric) const {
  std::vector<double> v;
  for (const auto& f : folds) {
    std::optional<double> x;
    if (metric == "accuracy") x = f.metrics.accuracy;
    else if (metric == "precision") x = f.metrics.precision;
    else if (metric == "recall") x = f.metrics.recall;
    else if (metric == "f1") x = f.metrics.f1;
    else if (metric == "eer") x = f.eer;
    else throw Error(ErrorCode::InvalidConfig, "unknown metric " + metric);
    if (x) v.push_back(*x);
  }
  return summarize(v);
}

namespace {


struct Split {
  std::vector<verifier::LabeledWindows> train;
  std::vector<verifier::LabeledWindows> validation;
  std::vector<std::vector<std::size_t>> gallery;  // windows enrolled per subject
  std::vector<std::vector<std::size_t>> test;     // probe windows per subject
};

Split window_split(std::span<const SubjectData> data, const std::vector<std::vector<int>>& folds,
                   int test_fold, int k) {
  const int val_fold = (test_fold + 1) % k;
  Split sp;
  sp.gallery.resize(data.size());
  sp.test.resize(data.size());
  for (std::size_t s = 0; s < data.size(); ++s) {
    verifier::LabeledWindows tr{data[s].id, {}}, va{data[s].id, {}};
    for (std::size_t w = 0; w < data[s].windows.size(); ++w) {
      const int f = folds[s][w];
      if (f == test_fold) {
        sp.test[s].push_back(w);
      } else if (f == val_fold) {
        va.windows.push_back(data[s].windows[w]);
      } else {
        tr.windows.push_back(data[s].windows[w]);
        sp.gallery[s].push_back(w);
      }
    }
    sp.train.push_back(std::move(tr));
    sp.validation.push_back(std::move(va));
  }
  return sp;
}

// Held-out subjects enroll their even windows and probe with the odd ones.
Split subject_split(std::span<const SubjectData> data, const std::vector<int>& folds,
                    int test_fold, int k) {
  const int val_fold = (test_fold + 1) % k;
  Split sp;
  sp.gallery.resize(data.size());
  sp.test.resize(data.size());
  for (std::size_t s = 0; s < data.size(); ++s) {
    const std::size_t n = data[s].windows.size();
    if (folds[s] != test_fold && folds[s] != val_fold) {
      verifier::LabeledWindows tr{data[s].id, data[s].windows};
      sp.train.push_back(std::move(tr));
      for (std::size_t w = 0; w < n; ++w) sp.gallery[s].push_back(w);
      continue;
    }
    verifier::LabeledWindows va{data[s].id, {}};
    for (std::size_t w = 0; w < n; ++w) {
      if (w % 2 == 0) {
        sp.gallery[s].push_back(w);
      } else if (folds[s] == test_fold) {
        sp.test[s].push_back(w);
      } else {
        va.windows.push_back(data[s].windows[w]);
      }
    }
    if (!va.windows.empty()) sp.validation.push_back(std::move(va));
  }
  return sp;
}

std::vector<verifier::Template> build_templates(const verifier::SiameseModel& model,
                                                std::span<const SubjectData> data,
                                                const Split& sp) {
  std::vector<verifier::Template> out;
  for (std::size_t s = 0; s < data.size(); ++s) {
    verifier::Template t;
    t.subject = data[s].id;
    t.threshold = model.threshold;
    for (std::size_t w : sp.gallery[s]) t.gallery.push_back(verifier::embed(model, data[s].windows[w]));
    t.enrolled_windows = t.gallery.size();
    out.push_back(std::move(t));
  }
  return out;
}

// Subject-disjoint folds: the threshold comes from held-out validation
// subjects probing every template.
double held_out_threshold(const verifier::SiameseModel& model, std::span<const SubjectData> data,
                          const std::vector<verifier::Template>& templates,
                          const std::vector<int>& folds, int val_fold) {
  std::vector<double> genuine, impostor;
  for (std::size_t s = 0; s < data.size(); ++s) {
    if (folds[s] != val_fold) continue;
    for (std::size_t w = 1; w < data[s].windows.size(); w += 2) {
      const auto e = verifier::embed(model, data[s].windows[w]);
      for (const auto& t : templates) {
        (t.subject == data[s].id ? genuine : impostor)
            .push_back(verifier::verify_embedding(t, e).score);
      }
    }
  }
  return verifier::choose_threshold(genuine, impostor);
}

struct AttackTally {
  std::size_t control = 0;
  std::size_t control_accepted = 0;
  std::size_t trials = 0;
  std::size_t accepted = 0;
};

void fold_attack(Scenario scenario, double alpha, const verifier::SiameseModel& model,
                 std::span<const verifier::Template> templates,
                 std::span<const SubjectData> data, const Split& sp,
                 const features::ExtractOptions& options, AttackTally& tally) {
  auto probe = [&](const verifier::Template& t, const features::RawWindow& w) {
    ++tally.trials;
    if (verifier::verify_embedding(t, verifier::embed(model, w)).accept) ++tally.accepted;
  };
  for (std::size_t s = 0; s < data.size(); ++s) {
    if (templates[s].gallery.empty()) continue;
    for (std::size_t i = 0; i < sp.test[s].size(); ++i) {
      const std::size_t w = sp.test[s][i];
      switch (scenario) {
        case Scenario::Mimic:
          for (std::size_t t = 0; t < templates.size(); ++t) {
            if (t != s && !templates[t].gallery.empty()) probe(templates[t], data[s].windows[w]);
          }
          break;
        case Scenario::StaticPhoto:
          probe(templates[s], static_photo_window(data[s].frames[data[s].window_starts[w]],
                                                  options.window, options));
          break;
        case Scenario::Deepfake:
          for (std::size_t a = 0; a < data.size(); ++a) {
            if (a == s || sp.test[a].empty()) continue;
            const auto& attacker = data[a].windows[sp.test[a][i % sp.test[a].size()]];
            probe(templates[s], deepfake_window(data[s].windows[w], attacker, alpha));
          }
          break;
      }
    }
  }
}

verifier::TrainConfig fold_training(const EvalConfig& c, int fold) {
  verifier::TrainConfig t = c.training;
  t.seed = c.seed * 1000003ULL + static_cast<std::uint64_t>(fold);
  return t;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "absent"; }

}  // namespace

EvalReport kfold(std::span<const SubjectData> data, const EvalConfig& config,
                 const features::ExtractOptions& options) {
  validate(config);
  if (data.size() < 2) throw Error(ErrorCode::InsufficientData, "evaluation needs 2+ subjects");
  EvalReport report;
  report.config = config;

  std::vector<std::size_t> counts;
  for (const auto& s : data) counts.push_back(s.windows.size());
  std::vector<std::vector<int>> window_folds;
  std::vector<int> subject_folds;
  if (config.subject_disjoint) {
    subject_folds = assign_subject_folds(data.size(), config.folds, config.seed);
    for (std::size_t n : counts) {
      if (n < 4) throw Error(ErrorCode::InsufficientData, "subject has fewer than 4 windows");
    }
  } else {
    window_folds = assign_folds(counts, config.folds, config.seed);
  }

  std::vector<double> all_genuine, all_impostor;
  std::vector<AttackTally> attack_tally(config.attacks.size());
  for (int f = 0; f < config.folds; ++f) {
    const Split sp = config.subject_disjoint ? subject_split(data, subject_folds, f, config.folds)
                                             : window_split(data, window_folds, f, config.folds);
    verifier::SiameseModel model =
        verifier::fit_model(sp.train, sp.validation, config.network, fold_training(config, f));
    auto templates = build_templates(model, data, sp);
    if (config.subject_disjoint) {
      model.threshold =
          held_out_threshold(model, data, templates, subject_folds, (f + 1) % config.folds);
      for (auto& t : templates) t.threshold = model.threshold;
    }

    FoldResult fr;
    fr.threshold = model.threshold;
    fr.train_loss = model.train_loss;
    fr.validation_loss = model.validation_loss;
    std::vector<Trial> trials;
    for (std::size_t s = 0; s < data.size(); ++s) {
      for (std::size_t w : sp.test[s]) {
        const auto e = verifier::embed(model, data[s].windows[w]);
        for (const auto& t : templates) {
          if (t.gallery.empty()) continue;
          const auto d = verifier::verify_embedding(t, e);
          const bool genuine = t.subject == data[s].id;
          trials.push_back({d.accept, genuine});
          (genuine ? fr.genuine : fr.impostor).push_back(d.score);
        }
      }
    }
    fr.confusion = tally(trials);
    for (std::size_t a = 0; a < config.attacks.size(); ++a) {
      attack_tally[a].control += fr.confusion.tp + fr.confusion.fn;
      attack_tally[a].control_accepted += fr.confusion.tp;
      fold_attack(config.attacks[a], config.deepfake_alpha, model, templates, data, sp, options,
                  attack_tally[a]);
    }
    fr.metrics = metrics(fr.confusion);
    fr.eer = verifier::equal_error_point(fr.genuine, fr.impostor).eer;
    report.pooled += fr.confusion;
    all_genuine.insert(all_genuine.end(), fr.genuine.begin(), fr.genuine.end());
    all_impostor.insert(all_impostor.end(), fr.impostor.begin(), fr.impostor.end());
    report.folds.push_back(std::move(fr));
  }
  report.pr = pr_curve(all_genuine, all_impostor, config.pr_steps);
  for (std::size_t a = 0; a < config.attacks.size(); ++a) {
    const auto& t = attack_tally[a];
    if (t.trials == 0 || t.control == 0) throw Error(ErrorCode::EmptySet, "no attack probes");
    AttackResult r;
    r.scenario = scenario_name(config.attacks[a]);
    r.control_trials = t.control;
    r.control_accept = static_cast<double>(t.control_accepted) / static_cast<double>(t.control);
    r.attack_trials = t.trials;
    r.success = static_cast<double>(t.accepted) / static_cast<double>(t.trials);
    report.attacks.push_back(r);
  }
  return report;
}

void write_report(std::ostream& out, const EvalReport& r) {
  const auto& c = r.config;
  out << "report_version = 1\n";
  out << "folds = " << c.folds << "\n";
  out << "fold_unit = " << (c.subject_disjoint ? "subject" : "window") << "\n";
  out << "seed = " << c.seed << "\n";
  out << "channels = " << c.network.channels << "\n";
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    const auto& fr = r.folds[f];
    const std::string p = "fold." + std::to_string(f) + ".";
    out << p << "tp = " << fr.confusion.tp << "\n";
    out << p << "fp = " << fr.confusion.fp << "\n";
    out << p << "tn = " << fr.confusion.tn << "\n";
    out << p << "fn = " << fr.confusion.fn << "\n";
    out << p << "accuracy = " << fmt(fr.metrics.accuracy) << "\n";
    out << p << "precision = " << fmt(fr.metrics.precision) << "\n";
    out << p << "recall = " << fmt(fr.metrics.recall) << "\n";
    out << p << "f1 = " << fmt(fr.metrics.f1) << "\n";
    out << p << "eer = " << fmt(fr.eer) << "\n";
    out << p << "threshold = " << fmt(fr.threshold) << "\n";
    out << p << "train_loss = " << fmt(fr.train_loss) << "\n";
    out << p << "validation_loss = " << fmt(fr.validation_loss) << "\n";
  }
  for (const char* m : {"accuracy", "precision", "recall", "f1", "eer"}) {
    const Summary s = r.summary(m);
    const std::string p = std::string("summary.") + m + ".";
    out << p << "mean = " << fmt(s.mean) << "\n";
    out << p << "median = " << fmt(s.median) << "\n";
    out << p << "stddev = " << fmt(s.stddev) << "\n";
    out << p << "folds = " << s.count << "\n";
  }
  out << "pooled.tp = " << r.pooled.tp << "\n";
  out << "pooled.fp = " << r.pooled.fp << "\n";
  out << "pooled.tn = " << r.pooled.tn << "\n";
  out << "pooled.fn = " << r.pooled.fn << "\n";
  if (r.pooled.total() > 0) {
    const Metrics m = metrics(r.pooled);
    out << "pooled.accuracy = " << fmt(m.accuracy) << "\n";
    out << "pooled.precision = " << fmt(m.precision) << "\n";
    out << "pooled.recall = " << fmt(m.recall) << "\n";
    out << "pooled.f1 = " << fmt(m.f1) << "\n";
  }
  out << "pr_points = " << r.pr.size() << "\n";
  for (const auto& a : r.attacks) write_attack_report(out, a);
}

void write_pr_points(std::ostream& out, std::span<const PrPoint> points) {
  for (const auto& p : points) {
    out << fmt(p.threshold) << ' ' << (p.precision ? fmt(*p.precision) : "-") << ' '
        << fmt(p.recall) << '\n';
  }
}

// --- Attacks -------------------------------------------------------------------

double impostor_success(std::span<const verifier::Template> templates,
                        std::span<const Probe> probes) {
  std::size_t total = 0, accepted = 0;
  for (const auto& t : templates) {
    for (const auto& p : probes) {
      if (p.subject == t.subject) continue;
      ++total;
      if (verifier::verify_embedding(t, p.embedding).accept) ++accepted;
    }
  }
  if (total == 0) throw Error(ErrorCode::EmptySet, "no impostor probes");
  return static_cast<double>(accepted) / static_cast<double>(total);
}

double genuine_accept(std::span<const verifier::Template> templates,
                      std::span<const Probe> probes) {
  std::size_t total = 0, accepted = 0;
  for (const auto& t : templates) {
    for (const auto& p : probes) {
      if (p.subject != t.subject) continue;
      ++total;
      if (verifier::verify_embedding(t, p.embedding).accept) ++accepted;
    }
  }
  if (total == 0) throw Error(ErrorCode::EmptySet, "no genuine probes");
  return static_cast<double>(accepted) / static_cast<double>(total);
}

features::RawWindow static_photo_window(const features::FrameFeatures& frame, int length,
                                        const features::ExtractOptions& options) {
  const std::vector<features::FrameFeatures> frames(static_cast<std::size_t>(length), frame);
  return features::window_features(frames, options);
}

features::RawWindow deepfake_window(std::span<const double> target,
                                    std::span<const double> attacker, double alpha) {
  namespace raw = features::raw;
  if (static_cast<int>(target.size()) != raw::kDim ||
      static_cast<int>(attacker.size()) != raw::kDim) {
    throw Error(ErrorCode::DimensionMismatch, "raw window size mismatch");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "blend alpha must be in [0, 1]");
  }
  features::RawWindow out(target.begin(), target.end());
  for (int i = raw::kMotion; i < raw::kFlags; ++i) {
    out[i] = (1.0 - alpha) * target[i] + alpha * attacker[i];
  }
  for (auto b : {features::Block::Motion, features::Block::Articulator}) {
    const int i = raw::kFlags + static_cast<int>(b);
    out[i] = alpha < 0.5 ? target[i] : attacker[i];
  }
  return out;
}

Scenario parse_scenario(const std::string& name) {
  if (name == "mimic") return Scenario::Mimic;
  if (name == "static") return Scenario::StaticPhoto;
  if (name == "deepfake") return Scenario::Deepfake;
  throw Error(ErrorCode::InvalidConfig, "unknown attack scenario '" + name + "'");
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Mimic: return "mimic";
    case Scenario::StaticPhoto: return "static";
    case Scenario::Deepfake: return "deepfake";
  }
  return "unknown";
}

AttackResult run_attack(std::span<const SubjectData> data, const EvalConfig& config,
                        Scenario scenario, const features::ExtractOptions& options) {
  EvalConfig c = config;
  c.attacks = {scenario};
  return kfold(data, c, options).attacks.front();
}

void write_attack_report(std::ostream& out, const AttackResult& a) {
  const std::string p = "attack." + a.scenario + ".";
  out << p << "control_accept = " << fmt(a.control_accept) << "\n";
  out << p << "control_trials = " << a.control_trials << "\n";
  out << p << "success = " << fmt(a.success) << "\n";
  out << p << "trials = " << a.attack_trials << "\n";
}

}  // namespace lipdyn::eval
