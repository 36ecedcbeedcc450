#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lipdyn/error.hpp"
#include "lipdyn/eval.hpp"
#include "lipdyn/synth.hpp"

using namespace lipdyn;
using namespace lipdyn::eval;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidConfig;
}

verifier::Template tpl(const std::string& id, std::vector<std::vector<double>> gallery,
                       double threshold) {
  verifier::Template t;
  t.subject = id;
  t.gallery = std::move(gallery);
  t.threshold = threshold;
  t.enrolled_windows = t.gallery.size();
  return t;
}

features::RawWindow filled(double base) {
  features::RawWindow w(features::raw::kDim);
  for (int i = 0; i < features::raw::kFlags; ++i) w[i] = base + i;
  for (int b = 0; b < features::kBlockCount; ++b) w[features::raw::kFlags + b] = 1.0;
  return w;
}

}  // namespace

TEST(Metrics, NineOneOneNine) {
  const auto m = metrics({.tp = 9, .fp = 1, .tn = 9, .fn = 1});
  EXPECT_EQ(m.accuracy, 0.9);
  EXPECT_EQ(*m.precision, 0.9);
  EXPECT_EQ(*m.recall, 0.9);
  EXPECT_EQ(*m.f1, 0.9);
}

TEST(Metrics, AllCorrect) {
  const auto m = metrics({.tp = 4, .fp = 0, .tn = 6, .fn = 0});
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(*m.precision, 1.0);
  EXPECT_EQ(*m.recall, 1.0);
  EXPECT_EQ(*m.f1, 1.0);
}

TEST(Metrics, NoAcceptsMeansNoPrecision) {
  const auto m = metrics({.tp = 0, .fp = 0, .tn = 5, .fn = 3});
  EXPECT_FALSE(m.precision);
  EXPECT_EQ(*m.recall, 0.0);
  EXPECT_FALSE(m.f1);
  EXPECT_EQ(m.accuracy, 5.0 / 8.0);
}

TEST(Metrics, EmptyConfusion) {
  EXPECT_EQ(code_of([] { metrics({}); }), ErrorCode::EmptyInput);
}

TEST(Metrics, TallyRecountsEveryTrial) {
  std::mt19937_64 gen(1);
  std::bernoulli_distribution coin(0.5);
  for (int round = 0; round < 20; ++round) {
    std::vector<Trial> trials(1 + gen() % 200);
    std::uint64_t accepted = 0, genuine = 0;
    for (auto& t : trials) {
      t.accepted = coin(gen);
      t.genuine = coin(gen);
      accepted += t.accepted;
      genuine += t.genuine;
    }
    const auto c = tally(trials);
    EXPECT_EQ(c.total(), trials.size());
    EXPECT_EQ(c.tp + c.fp, accepted);
    EXPECT_EQ(c.tp + c.fn, genuine);
    const auto m = metrics(c);
    EXPECT_GE(m.accuracy, 0.0);
    EXPECT_LE(m.accuracy, 1.0);
  }
}

TEST(PrCurve, SeparableReachesPerfectPoint) {
  const std::vector<double> g{0.1, 0.2, 0.3}, im{0.9, 1.0};
  const auto pr = pr_curve(g, im);
  ASSERT_EQ(pr.size(), 5u);
  EXPECT_EQ(pr[2].threshold, 0.3);
  EXPECT_EQ(*pr[2].precision, 1.0);
  EXPECT_EQ(pr[2].recall, 1.0);
  EXPECT_EQ(*pr[0].precision, 1.0);
  EXPECT_DOUBLE_EQ(pr[0].recall, 1.0 / 3.0);
}

TEST(PrCurve, SinglePair) {
  const std::vector<double> g{0.5}, im{0.7};
  const auto pr = pr_curve(g, im);
  ASSERT_EQ(pr.size(), 2u);
  EXPECT_EQ(*pr[0].precision, 1.0);
  EXPECT_EQ(pr[0].recall, 1.0);
  EXPECT_EQ(*pr[1].precision, 0.5);
}

TEST(PrCurve, IdenticalDistributions) {
  const std::vector<double> s{0.1, 0.2, 0.3, 0.4};
  const auto pr = pr_curve(s, s);
  ASSERT_EQ(pr.size(), 4u);
  for (const auto& p : pr) EXPECT_DOUBLE_EQ(*p.precision, 0.5);
  EXPECT_EQ(pr.back().recall, 1.0);
}

TEST(PrCurve, LargestThresholdAcceptsEverything) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> g(30), im(70);
  for (double& v : g) v = u(gen);
  for (double& v : im) v = u(gen) + 0.3;
  const auto pr = pr_curve(g, im);
  EXPECT_EQ(pr.back().recall, 1.0);
  EXPECT_DOUBLE_EQ(*pr.back().precision, 0.3);
  for (std::size_t i = 1; i < pr.size(); ++i) {
    EXPECT_GT(pr[i].threshold, pr[i - 1].threshold);
    EXPECT_GE(pr[i].recall, pr[i - 1].recall);
  }
}

TEST(PrCurve, StepsKeepLargestScore) {
  std::vector<double> g, im;
  for (int i = 0; i < 50; ++i) g.push_back(i * 0.01);
  for (int i = 0; i < 50; ++i) im.push_back(0.25 + i * 0.01 + 0.005);
  const auto full = pr_curve(g, im);
  const auto few = pr_curve(g, im, 7);
  ASSERT_EQ(few.size(), 7u);
  EXPECT_EQ(few.front().threshold, full.front().threshold);
  EXPECT_EQ(few.back().threshold, full.back().threshold);
  EXPECT_EQ(pr_curve(g, im, 1).size(), 1u);
}

TEST(PrCurve, EmptySide) {
  const std::vector<double> a{1.0}, none;
  EXPECT_EQ(code_of([&] { pr_curve(none, a); }), ErrorCode::EmptySet);
  EXPECT_EQ(code_of([&] { pr_curve(a, none); }), ErrorCode::EmptySet);
}

TEST(Summary, PopulationStatistics) {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  const auto s = summarize(v);
  EXPECT_EQ(s.mean, 5.0);
  EXPECT_EQ(s.median, 4.5);
  EXPECT_EQ(s.stddev, 2.0);
  EXPECT_EQ(s.count, 8u);
  const std::vector<double> odd{3, 1, 2};
  EXPECT_EQ(summarize(odd).median, 2.0);
}

TEST(Folds, PartitionEveryWindowOnce) {
  const std::vector<std::size_t> counts{20, 23, 10, 31};
  const auto folds = assign_folds(counts, 10, 7);
  ASSERT_EQ(folds.size(), counts.size());
  for (std::size_t s = 0; s < counts.size(); ++s) {
    ASSERT_EQ(folds[s].size(), counts[s]);
    std::vector<int> per_fold(10, 0);
    for (int f : folds[s]) {
      ASSERT_GE(f, 0);
      ASSERT_LT(f, 10);
      ++per_fold[f];
    }
    // Round-robin dealing keeps fold sizes within one of each other.
    const auto [lo, hi] = std::minmax_element(per_fold.begin(), per_fold.end());
    EXPECT_LE(*hi - *lo, 1);
    EXPECT_GE(*lo, 1);
  }
}

TEST(Folds, DeterministicPerSeed) {
  const std::vector<std::size_t> counts{20, 20, 20};
  EXPECT_EQ(assign_folds(counts, 5, 3), assign_folds(counts, 5, 3));
  EXPECT_NE(assign_folds(counts, 5, 3), assign_folds(counts, 5, 4));
}

TEST(Folds, TooFewWindows) {
  const std::vector<std::size_t> counts{20, 9};
  EXPECT_EQ(code_of([&] { assign_folds(counts, 10, 1); }), ErrorCode::InsufficientData);
}

TEST(Folds, SubjectLevel) {
  const auto f = assign_subject_folds(12, 4, 9);
  ASSERT_EQ(f.size(), 12u);
  std::vector<int> per(4, 0);
  for (int x : f) ++per[x];
  EXPECT_EQ(per, (std::vector<int>{3, 3, 3, 3}));
  EXPECT_EQ(f, assign_subject_folds(12, 4, 9));
  EXPECT_EQ(code_of([] { assign_subject_folds(3, 4, 1); }), ErrorCode::InsufficientData);
}

TEST(EvalConfigCheck, NeedsThreeFolds) {
  EvalConfig c;
  c.folds = 2;
  EXPECT_EQ(code_of([&] { validate(c); }), ErrorCode::InvalidConfig);
  c.folds = 3;
  EXPECT_NO_THROW(validate(c));
}

TEST(Attacks, ZeroThresholdAcceptsNoImpostor) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(0.0, 1.0);
  auto vec = [&] {
    std::vector<double> v(4);
    for (double& x : v) x = n(gen);
    return v;
  };
  std::vector<verifier::Template> templates;
  std::vector<Probe> probes;
  for (const char* id : {"a", "b", "c"}) {
    const auto e = vec();
    templates.push_back(tpl(id, {e, vec()}, 0.0));
    probes.push_back({id, e});
    probes.push_back({id, vec()});
  }
  EXPECT_EQ(impostor_success(templates, probes), 0.0);
  EXPECT_EQ(genuine_accept(templates, probes), 0.5);
  for (auto& t : templates) t.threshold = 1e9;
  EXPECT_EQ(impostor_success(templates, probes), 1.0);
  EXPECT_EQ(genuine_accept(templates, probes), 1.0);
}

TEST(Attacks, NoProbesOfAKind) {
  std::vector<verifier::Template> templates{tpl("a", {{0.0}}, 1.0)};
  std::vector<Probe> own{{"a", {0.0}}};
  std::vector<Probe> other{{"b", {0.0}}};
  EXPECT_EQ(code_of([&] { impostor_success(templates, own); }), ErrorCode::EmptySet);
  EXPECT_EQ(code_of([&] { genuine_accept(templates, other); }), ErrorCode::EmptySet);
}

TEST(Attacks, DeepfakeBlend) {
  namespace raw = features::raw;
  const auto target = filled(0.0);
  auto attacker = filled(1000.0);
  attacker[raw::kFlags + static_cast<int>(features::Block::Motion)] = 0.0;

  EXPECT_EQ(deepfake_window(target, attacker, 0.0), target);

  const auto swapped = deepfake_window(target, attacker, 1.0);
  for (int i = 0; i < raw::kMotion; ++i) EXPECT_EQ(swapped[i], target[i]);
  for (int i = raw::kMotion; i < raw::kFlags; ++i) EXPECT_EQ(swapped[i], attacker[i]);
  EXPECT_FALSE(features::block_present(swapped, features::Block::Motion));
  EXPECT_TRUE(features::block_present(swapped, features::Block::Static));

  const auto half = deepfake_window(target, attacker, 0.25);
  EXPECT_DOUBLE_EQ(half[raw::kMotion], 0.75 * target[raw::kMotion] + 0.25 * attacker[raw::kMotion]);
  EXPECT_TRUE(features::block_present(half, features::Block::Motion));

  EXPECT_EQ(code_of([&] { deepfake_window(target, attacker, 1.5); }), ErrorCode::InvalidConfig);
  const features::RawWindow short_window(10);
  EXPECT_EQ(code_of([&] { deepfake_window(short_window, attacker, 1.0); }),
            ErrorCode::DimensionMismatch);
}

TEST(Attacks, StaticPhotoHasNoDynamics) {
  synth::SubjectParams p;
  Rng noise(5);
  const cv::Size size(320, 240);
  LandmarkFrame lf;
  lf.points = synth::landmarks_at(p, 0.1, size);
  const cv::Mat3b image = synth::render_frame(p, lf.points, size, noise);
  const auto frame = features::extract_frame(image, lf);
  const auto w = static_photo_window(frame, 25);
  namespace raw = features::raw;
  ASSERT_EQ(w.size(), static_cast<std::size_t>(raw::kDim));
  for (int i = raw::kArticulator; i < raw::kArticulator + 380; ++i) EXPECT_EQ(w[i], 0.0);
  EXPECT_FALSE(features::block_present(w, features::Block::Motion));
  EXPECT_TRUE(features::block_present(w, features::Block::Static));
  for (int i = raw::kStatic; i < raw::kTexture; ++i) EXPECT_DOUBLE_EQ(w[i], frame.shape[i]);
}

TEST(Scenario, Names) {
  for (auto s : {Scenario::Mimic, Scenario::StaticPhoto, Scenario::Deepfake}) {
    EXPECT_EQ(parse_scenario(scenario_name(s)), s);
  }
  EXPECT_EQ(code_of([] { parse_scenario("replay"); }), ErrorCode::InvalidConfig);
}

TEST(Report, PrPointsMarkAbsentPrecision) {
  std::vector<PrPoint> pts(2);
  pts[0].threshold = 0.5;
  pts[0].recall = 0.0;
  pts[1] = {.precision = 0.75, .recall = 1.0, .threshold = 1.25};
  std::ostringstream out;
  write_pr_points(out, pts);
  EXPECT_EQ(out.str(), "0.5 - 0\n1.25 0.75 1\n");
}

TEST(Report, EveryLineIsKeyValue) {
  EvalReport r;
  r.config.folds = 3;
  FoldResult f;
  f.confusion = {.tp = 9, .fp = 1, .tn = 9, .fn = 1};
  f.metrics = metrics(f.confusion);
  r.folds = {f, f, f};
  r.pooled = {.tp = 27, .fp = 3, .tn = 27, .fn = 3};
  r.attacks.push_back({.scenario = "static", .control_accept = 1.0, .success = 0.0,
                       .control_trials = 10, .attack_trials = 10});
  std::ostringstream out;
  write_report(out, r);
  std::istringstream in(out.str());
  std::string line;
  std::set<std::string> keys;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    ASSERT_NE(eq, std::string::npos) << line;
    EXPECT_TRUE(keys.insert(line.substr(0, eq)).second) << "duplicate " << line;
  }
  EXPECT_TRUE(keys.count("summary.accuracy.mean"));
  EXPECT_TRUE(keys.count("attack.static.success"));
  EXPECT_NE(out.str().find("pooled.accuracy = 0.9\n"), std::string::npos);
  EXPECT_NE(out.str().find("summary.f1.stddev = 0\n"), std::string::npos);
}
