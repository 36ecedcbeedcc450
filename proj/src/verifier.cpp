#include "lipdyn/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "lipdyn/error.hpp"
#include "lipdyn/random.hpp"

namespace lipdyn::verifier {

namespace {

using features::Block;

struct BlockSpan {
  Block block;
  int assembled;
  int size;
};

constexpr std::array<BlockSpan, features::kBlockCount> kBlocks{{
    {Block::Static, layout::kStatic, features::kShapeSize},
    {Block::Texture, layout::kTexture, texture::kTextureBlockSize},
    {Block::Motion, layout::kMotion, lipprint::kMotionBlockSize},
    {Block::Articulator, layout::kArticulator, articulator::kArticulatorBlockSize},
}};

bool assembled_present(std::span<const double> v, Block b) {
  return v[layout::kFlags + static_cast<int>(b)] != 0.0;
}

}  // namespace

WindowVector project(std::span<const double> raw, const texture::TextureProjection& pca) {
  if (static_cast<int>(raw.size()) != features::raw::kDim) {
    throw Error(ErrorCode::DimensionMismatch,
                "raw window has " + std::to_string(raw.size()) + " values, expected " +
                    std::to_string(features::raw::kDim));
  }
  if (!features::block_present(raw, Block::Static) ||
      !features::block_present(raw, Block::Articulator)) {
    throw Error(ErrorCode::InsufficientData, "window lacks the static or articulator block");
  }
  WindowVector out(layout::kDim, 0.0);
  std::copy_n(raw.begin() + features::raw::kStatic, features::kShapeSize,
              out.begin() + layout::kStatic);
  if (features::block_present(raw, Block::Texture)) {
    const auto t = pca.apply(raw.subspan(features::raw::kTexture)
                                 .first<texture::kRawTextureSize>());
    std::copy(t.begin(), t.end(), out.begin() + layout::kTexture);
  }
  if (features::block_present(raw, Block::Motion)) {
    std::copy_n(raw.begin() + features::raw::kMotion, lipprint::kMotionBlockSize,
                out.begin() + layout::kMotion);
  }
  std::copy_n(raw.begin() + features::raw::kArticulator, articulator::kArticulatorBlockSize,
              out.begin() + layout::kArticulator);
  for (int b = 0; b < features::kBlockCount; ++b) {
    out[layout::kFlags + b] = raw[features::raw::kFlags + b] != 0.0 ? 1.0 : 0.0;
  }
  return out;
}

Normalization fit_normalization(std::span<const WindowVector> projected) {
  Normalization n;
  n.mean.assign(layout::kFeatures, 0.0);
  n.stddev.assign(layout::kFeatures, 1.0);
  for (const auto& blk : kBlocks) {
    std::size_t count = 0;
    for (const auto& v : projected) {
      if (!assembled_present(v, blk.block)) continue;
      ++count;
      for (int i = 0; i < blk.size; ++i) n.mean[blk.assembled + i] += v[blk.assembled + i];
    }
    if (count == 0) continue;
    for (int i = 0; i < blk.size; ++i) n.mean[blk.assembled + i] /= static_cast<double>(count);
    std::vector<double> var(static_cast<std::size_t>(blk.size), 0.0);
    for (const auto& v : projected) {
      if (!assembled_present(v, blk.block)) continue;
      for (int i = 0; i < blk.size; ++i) {
        const double d = v[blk.assembled + i] - n.mean[blk.assembled + i];
        var[i] += d * d;
      }
    }
    for (int i = 0; i < blk.size; ++i) {
      const double s = std::sqrt(var[i] / static_cast<double>(count));
      n.stddev[blk.assembled + i] = s < 1e-12 ? 1.0 : s;
    }
  }
  return n;
}

WindowVector normalize(std::span<const double> projected, const Normalization& norm) {
  if (static_cast<int>(projected.size()) != layout::kDim ||
      static_cast<int>(norm.mean.size()) != layout::kFeatures ||
      static_cast<int>(norm.stddev.size()) != layout::kFeatures) {
    throw Error(ErrorCode::DimensionMismatch, "normalization size mismatch");
  }
  WindowVector out(projected.begin(), projected.end());
  for (const auto& blk : kBlocks) {
    const bool present = assembled_present(projected, blk.block);
    for (int i = blk.assembled; i < blk.assembled + blk.size; ++i) {
      out[i] = present ? (projected[i] - norm.mean[i]) / norm.stddev[i] : 0.0;
    }
  }
  return out;
}

texture::TextureProjection fit_texture_projection(std::span<const features::RawWindow> raw) {
  std::vector<std::array<double, texture::kRawTextureSize>> textured;
  for (const auto& w : raw) {
    if (static_cast<int>(w.size()) != features::raw::kDim) {
      throw Error(ErrorCode::DimensionMismatch, "raw window size mismatch");
    }
    if (!features::block_present(w, Block::Texture)) continue;
    auto& t = textured.emplace_back();
    std::copy_n(w.begin() + features::raw::kTexture, texture::kRawTextureSize, t.begin());
  }
  if (textured.size() < 3) {
    texture::TextureProjection none;
    for (auto& b : none.bases) b.rank_deficient = true;
    return none;
  }
  return texture::TextureProjection::fit(textured);
}

WindowVector assemble(const SiameseModel& model, std::span<const double> raw) {
  return normalize(project(raw, model.pca), model.norm);
}

std::vector<double> embed(const SiameseModel& model, std::span<const double> raw) {
  return model.net.embed(assemble(model, raw));
}

Template enroll(const SiameseModel& model, const std::string& subject,
                std::span<const features::RawWindow> windows, std::optional<double> threshold) {
  if (windows.size() < 3) {
    throw Error(ErrorCode::TooFewWindows,
                "enrollment needs at least 3 windows, got " + std::to_string(windows.size()));
  }
  Template tpl;
  tpl.subject = subject;
  for (const auto& w : windows) tpl.gallery.push_back(embed(model, w));
  tpl.threshold = threshold.value_or(model.threshold);
  tpl.model_version = model.version();
  tpl.enrolled_windows = windows.size();
  return tpl;
}

OperatingPoint equal_error_point(std::span<const double> genuine,
                                 std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty()) {
    throw Error(ErrorCode::EmptySet, "threshold selection needs genuine and impostor scores");
  }
  std::vector<double> g(genuine.begin(), genuine.end());
  std::vector<double> im(impostor.begin(), impostor.end());
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  std::vector<double> cuts;
  cuts.reserve(g.size() + im.size());
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(cuts));
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // Interval 0 is (-inf, cuts[0]); interval j >= 1 is [cuts[j-1], cuts[j]).
  const auto ng = static_cast<long long>(g.size());
  const auto ni = static_cast<long long>(im.size());
  const std::size_t intervals = cuts.size() + 1;
  std::vector<long long> far_n(intervals), frr_n(intervals), gap(intervals);
  for (std::size_t j = 0; j < intervals; ++j) {
    if (j == 0) {
      far_n[j] = 0;
      frr_n[j] = ng;
    } else {
      const double t = cuts[j - 1];
      far_n[j] = std::upper_bound(im.begin(), im.end(), t) - im.begin();
      frr_n[j] = ng - (std::upper_bound(g.begin(), g.end(), t) - g.begin());
    }
    gap[j] = std::llabs(far_n[j] * ng - frr_n[j] * ni);  // |FAR - FRR| * ng * ni
  }
  const long long best = *std::min_element(gap.begin(), gap.end());
  std::size_t first = 0;
  while (gap[first] != best) ++first;
  std::size_t last = first;
  while (last + 1 < intervals && gap[last + 1] == best) ++last;

  const double lo = first == 0 ? cuts.front() : cuts[first - 1];
  const double hi = last + 1 >= intervals ? cuts.back() : cuts[last];
  OperatingPoint op;
  op.threshold = 0.5 * (lo + hi);
  op.far = static_cast<double>(far_n[first]) / static_cast<double>(ni);
  op.frr = static_cast<double>(frr_n[first]) / static_cast<double>(ng);
  op.eer = 0.5 * (op.far + op.frr);
  return op;
}

double choose_threshold(std::span<const double> genuine, std::span<const double> impostor) {
  return equal_error_point(genuine, impostor).threshold;
}

Decision verify_embedding(const Template& tpl, std::span<const double> embedding) {
  if (tpl.gallery.empty()) throw Error(ErrorCode::EmptySet, "template gallery is empty");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : tpl.gallery) best = std::min(best, distance(e, embedding));
  return {best <= tpl.threshold, best};
}

Decision verify(const SiameseModel& model, const Template& tpl, std::span<const double> raw) {
  if (tpl.model_version != model.version()) {
    throw Error(ErrorCode::VersionMismatch, "template was enrolled with model " +
                                                tpl.model_version + ", not " + model.version());
  }
  return verify_embedding(tpl, embed(model, raw));
}

bool DecisionSmoother::push(bool accept) {
  recent_.push_back(accept);
  if (recent_.size() > span_) recent_.pop_front();
  const auto yes = std::count(recent_.begin(), recent_.end(), true);
  return 2 * static_cast<std::size_t>(yes) > recent_.size();
}

// --- Training ----------------------------------------------------------------

std::vector<PairIndex> make_pairs(std::span<const int> labels, std::uint64_t seed) {
  std::vector<PairIndex> pairs;
  std::size_t possible_negatives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      if (labels[i] == labels[j]) {
        pairs.push_back({i, j, true});
      } else {
        ++possible_negatives;
      }
    }
  }
  const std::size_t wanted = std::min(pairs.size(), possible_negatives);
  Rng rng(seed ^ 0x2545f4914f6cdd1dULL);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  if (wanted * 2 > possible_negatives) {
    std::vector<PairIndex> all;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = i + 1; j < labels.size(); ++j) {
        if (labels[i] != labels[j]) all.push_back({i, j, false});
      }
    }
    rng.shuffle(all);
    pairs.insert(pairs.end(), all.begin(), all.begin() + static_cast<long>(wanted));
    return pairs;
  }
  while (seen.size() < wanted) {
    std::size_t i = rng.below(labels.size());
    std::size_t j = rng.below(labels.size());
    if (labels[i] == labels[j]) continue;
    if (i > j) std::swap(i, j);
    if (seen.insert({i, j}).second) pairs.push_back({i, j, false});
  }
  return pairs;
}

namespace {

struct Flattened {
  std::vector<features::RawWindow> raw;
  std::vector<int> labels;
};

Flattened flatten(std::span<const LabeledWindows> sets) {
  Flattened f;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    for (const auto& w : sets[s].windows) {
      f.raw.push_back(w);
      f.labels.push_back(static_cast<int>(s));
    }
  }
  return f;
}

double min_distance(std::span<const std::vector<double>> gallery, std::span<const double> e,
                    std::size_t skip = std::numeric_limits<std::size_t>::max()) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    if (i != skip) best = std::min(best, distance(gallery[i], e));
  }
  return best;
}

}  // namespace

SiameseModel fit_model(std::span<const LabeledWindows> train,
                       std::span<const LabeledWindows> validation, const NetworkConfig& network,
                       const TrainConfig& training) {
  validate(network);
  validate(training);
  if (network.input_dim != layout::kDim) {
    throw Error(ErrorCode::InvalidConfig,
                "network input must match the window dimension " + std::to_string(layout::kDim));
  }
  const Flattened tr = flatten(train);

  SiameseModel model;
  model.network = network;
  model.training = training;
  model.net = SiameseNetwork(network);
  model.pca = fit_texture_projection(tr.raw);

  std::vector<WindowVector> projected;
  projected.reserve(tr.raw.size());
  for (const auto& w : tr.raw) projected.push_back(project(w, model.pca));
  model.norm = fit_normalization(projected);

  std::vector<std::vector<double>> inputs;
  inputs.reserve(tr.raw.size());
  for (const auto& p : projected) inputs.push_back(normalize(p, model.norm));
  const auto pairs = make_pairs(tr.labels, training.seed);

  // Validation pairs live after the training inputs in the same table.
  std::vector<PairIndex> val_pairs;
  if (!validation.empty()) {
    const Flattened va = flatten(validation);
    const std::size_t offset = inputs.size();
    for (const auto& w : va.raw) {
      inputs.push_back(normalize(project(w, model.pca), model.norm));
    }
    for (auto p : make_pairs(va.labels, training.seed + 1)) {
      p.a += offset;
      p.b += offset;
      val_pairs.push_back(p);
    }
  }

  model.net.initialize(training.seed);
  const TrainResult result = verifier::train(model.net, inputs, pairs, training, val_pairs);
  model.train_loss = result.train_loss;
  model.validation_loss = result.validation_loss;

  // Threshold: each probe's minimum distance to every subject's gallery.
  std::vector<std::vector<std::vector<double>>> galleries(train.size());
  for (std::size_t i = 0; i < tr.raw.size(); ++i) {
    galleries[static_cast<std::size_t>(tr.labels[i])].push_back(model.net.embed(inputs[i]));
  }
  std::vector<double> genuine, impostor;
  if (!validation.empty()) {
    std::size_t row = tr.raw.size();
    for (std::size_t s = 0; s < validation.size(); ++s) {
      for (std::size_t w = 0; w < validation[s].windows.size(); ++w, ++row) {
        const auto e = model.net.embed(inputs[row]);
        for (std::size_t t = 0; t < galleries.size(); ++t) {
          if (galleries[t].empty()) continue;
          const bool same = validation[s].subject == train[t].subject;
          (same ? genuine : impostor).push_back(min_distance(galleries[t], e));
        }
      }
    }
  }
  if (genuine.empty() || impostor.empty()) {
    // No usable validation split: leave-one-out over the training windows.
    genuine.clear();
    impostor.clear();
    std::vector<std::size_t> seen(galleries.size(), 0);
    for (std::size_t i = 0; i < tr.raw.size(); ++i) {
      const auto s = static_cast<std::size_t>(tr.labels[i]);
      const auto& e = galleries[s][seen[s]];
      for (std::size_t t = 0; t < galleries.size(); ++t) {
        if (t == s) {
          if (galleries[t].size() > 1) genuine.push_back(min_distance(galleries[t], e, seen[s]));
        } else if (!galleries[t].empty()) {
          impostor.push_back(min_distance(galleries[t], e));
        }
      }
      ++seen[s];
    }
  }
  model.threshold = choose_threshold(genuine, impostor);
  return model;
}

}  // namespace lipdyn::verifier
