#include "lipdyn/siamese.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lipdyn/error.hpp"
#include "lipdyn/random.hpp"

namespace lipdyn::verifier {

void validate(const NetworkConfig& c) {
  if (c.kernel < 1 || c.channels < 1 || c.embedding_dim < 1 || c.pool_bins < 1) {
    throw Error(ErrorCode::InvalidConfig, "network sizes must be positive");
  }
  if (c.input_dim < c.kernel) {
    throw Error(ErrorCode::InvalidConfig, "input shorter than the convolution kernel");
  }
  if (c.pool_bins > c.input_dim - c.kernel + 1) {
    throw Error(ErrorCode::InvalidConfig, "more pooling bins than convolution outputs");
  }
}

void validate(const TrainConfig& c) {
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
    throw Error(ErrorCode::InvalidConfig, "learning rate must be positive");
  }
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "momentum must be in [0, 1)");
  }
  if (c.batch_size < 1 || c.epochs < 1) {
    throw Error(ErrorCode::InvalidConfig, "batch size and epochs must be positive");
  }
  if (!(c.margin > 0.0) || !std::isfinite(c.margin)) {
    throw Error(ErrorCode::InvalidConfig, "margin must be positive");
  }
}

SiameseNetwork::SiameseNetwork(const NetworkConfig& config) : config_(config) {
  validate(config_);
  const auto k = static_cast<std::size_t>(config_.channels);
  const auto e = static_cast<std::size_t>(config_.embedding_dim);
  conv_w_ = 0;
  conv_b_ = conv_w_ + k * static_cast<std::size_t>(config_.kernel);
  dense_w_ = conv_b_ + k;
  dense_b_ = dense_w_ + e * static_cast<std::size_t>(pooled_size());
  params_.assign(dense_b_ + e, 0.0);
}

void SiameseNetwork::initialize(std::uint64_t seed) {
  Rng rng(seed);
  std::fill(params_.begin(), params_.end(), 0.0);
  const double conv_std = std::sqrt(2.0 / config_.kernel);
  for (std::size_t i = conv_w_; i < conv_b_; ++i) params_[i] = rng.normal(0.0, conv_std);
  const double dense_std = std::sqrt(2.0 / pooled_size());
  for (std::size_t i = dense_w_; i < dense_b_; ++i) params_[i] = rng.normal(0.0, dense_std);
}

void SiameseNetwork::check_input(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != config_.input_dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "input has " + std::to_string(input.size()) + " values, network expects " +
                    std::to_string(config_.input_dim));
  }
}

std::pair<int, int> SiameseNetwork::bin_range(int bin) const {
  const long len = conv_length();
  const long bins = config_.pool_bins;
  return {static_cast<int>(bin * len / bins), static_cast<int>((bin + 1) * len / bins)};
}

std::vector<double> SiameseNetwork::forward(std::span<const double> x, Activations* cache) const {
  check_input(x);
  const int K = config_.channels, W = config_.kernel, L = conv_length();
  const int B = config_.pool_bins, E = config_.embedding_dim, P = pooled_size();
  std::vector<double> pre(static_cast<std::size_t>(K) * L);
  std::vector<double> pooled(static_cast<std::size_t>(P), 0.0);
  for (int c = 0; c < K; ++c) {
    const double* w = &params_[conv_w_ + static_cast<std::size_t>(c) * W];
    const double b = params_[conv_b_ + c];
    double* row = &pre[static_cast<std::size_t>(c) * L];
    for (int i = 0; i < L; ++i) {
      double s = b;
      for (int k = 0; k < W; ++k) s += w[k] * x[i + k];
      row[i] = s;
    }
    for (int bin = 0; bin < B; ++bin) {
      const auto [lo, hi] = bin_range(bin);
      double s = 0.0;
      for (int i = lo; i < hi; ++i) s += std::max(0.0, row[i]);
      pooled[static_cast<std::size_t>(c) * B + bin] = s / (hi - lo);
    }
  }
  std::vector<double> out(static_cast<std::size_t>(E));
  for (int e = 0; e < E; ++e) {
    const double* w = &params_[dense_w_ + static_cast<std::size_t>(e) * P];
    double s = params_[dense_b_ + e];
    for (int p = 0; p < P; ++p) s += w[p] * pooled[p];
    out[e] = s;
  }
  if (cache) {
    cache->pre = std::move(pre);
    cache->pooled = std::move(pooled);
  }
  return out;
}

std::vector<double> SiameseNetwork::embed(std::span<const double> input) const {
  return forward(input, nullptr);
}

std::vector<double> SiameseNetwork::embed(std::span<const double> input,
                                          Activations& activations) const {
  return forward(input, &activations);
}

void SiameseNetwork::backward(std::span<const double> x, std::span<const double> g_emb,
                              std::span<double> grad) const {
  Activations cache;
  forward(x, &cache);
  backward(x, cache, g_emb, grad);
}

void SiameseNetwork::backward(std::span<const double> x, const Activations& cache,
                              std::span<const double> g_emb, std::span<double> grad) const {
  if (grad.size() != params_.size() ||
      static_cast<int>(g_emb.size()) != config_.embedding_dim) {
    throw Error(ErrorCode::DimensionMismatch, "gradient buffer size mismatch");
  }
  const int K = config_.channels, W = config_.kernel, L = conv_length();
  const int B = config_.pool_bins, E = config_.embedding_dim, P = pooled_size();

  std::vector<double> g_pooled(static_cast<std::size_t>(P), 0.0);
  for (int e = 0; e < E; ++e) {
    const double g = g_emb[e];
    if (g == 0.0) continue;
    grad[dense_b_ + e] += g;
    const std::size_t row = dense_w_ + static_cast<std::size_t>(e) * P;
    for (int p = 0; p < P; ++p) {
      grad[row + p] += g * cache.pooled[p];
      g_pooled[p] += g * params_[row + p];
    }
  }
  for (int c = 0; c < K; ++c) {
    const double* pre = &cache.pre[static_cast<std::size_t>(c) * L];
    double* gw = &grad[conv_w_ + static_cast<std::size_t>(c) * W];
    double gb = 0.0;
    for (int bin = 0; bin < B; ++bin) {
      const double g = g_pooled[static_cast<std::size_t>(c) * B + bin];
      if (g == 0.0) continue;
      const auto [lo, hi] = bin_range(bin);
      const double gi = g / (hi - lo);
      for (int i = lo; i < hi; ++i) {
        if (pre[i] <= 0.0) continue;
        gb += gi;
        for (int k = 0; k < W; ++k) gw[k] += gi * x[i + k];
      }
    }
    grad[conv_b_ + c] += gb;
  }
}

double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "embedding sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double contrastive_loss(double d, bool same, double margin) {
  if (same) return d * d;
  const double h = std::max(0.0, margin - d);
  return h * h;
}

double batch_loss(const SiameseNetwork& net, std::span<const std::vector<double>> inputs,
                  std::span<const PairIndex> pairs, double margin, std::vector<double>* grad) {
  if (pairs.empty()) return 0.0;
  if (grad) grad->assign(net.parameter_count(), 0.0);
  const double scale = 1.0 / static_cast<double>(pairs.size());
  double total = 0.0;
  std::vector<double> g(static_cast<std::size_t>(net.config().embedding_dim));
  SiameseNetwork::Activations act_a, act_b;
  for (const auto& p : pairs) {
    const auto& xa = inputs[p.a];
    const auto& xb = inputs[p.b];
    const auto ea = net.embed(xa, act_a);
    const auto eb = net.embed(xb, act_b);
    const double d = distance(ea, eb);
    total += contrastive_loss(d, p.same, margin);
    if (!grad) continue;
    double dl_dd;
    if (p.same) {
      dl_dd = 2.0 * d;
    } else {
      dl_dd = d < margin ? -2.0 * (margin - d) : 0.0;
    }
    if (dl_dd == 0.0 || d == 0.0) continue;
    const double f = scale * dl_dd / d;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = f * (ea[i] - eb[i]);
    net.backward(xa, act_a, g, *grad);
    for (double& v : g) v = -v;
    net.backward(xb, act_b, g, *grad);
  }
  return total * scale;
}

TrainResult train(SiameseNetwork& net, std::span<const std::vector<double>> inputs,
                  std::span<const PairIndex> pairs, const TrainConfig& config,
                  std::span<const PairIndex> validation) {
  validate(config);
  const bool has_pos = std::any_of(pairs.begin(), pairs.end(), [](auto& p) { return p.same; });
  const bool has_neg = std::any_of(pairs.begin(), pairs.end(), [](auto& p) { return !p.same; });
  if (!has_pos) throw Error(ErrorCode::NoPositivePairs, "training set has no same-subject pairs");
  if (!has_neg) {
    throw Error(ErrorCode::NoNegativePairs, "training set has no different-subject pairs");
  }
  for (const auto& p : pairs) {
    if (p.a >= inputs.size() || p.b >= inputs.size()) {
      throw Error(ErrorCode::DimensionMismatch, "pair index out of range");
    }
  }

  Rng rng(config.seed ^ 0x5851f42d4c957f2dULL);
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> velocity(net.parameter_count(), 0.0);
  std::vector<double> grad;
  std::vector<PairIndex> batch;
  auto params = net.parameters();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(pairs[order[i]]);
      const double loss = batch_loss(net, inputs, batch, config.margin, &grad);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::NonFiniteLoss,
                    "loss diverged at epoch " + std::to_string(epoch) + " batch " +
                        std::to_string(start / static_cast<std::size_t>(config.batch_size)));
      }
      for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i] = config.momentum * velocity[i] - config.learning_rate * grad[i];
        params[i] += velocity[i];
      }
    }
  }

  TrainResult result;
  result.train_loss = batch_loss(net, inputs, pairs, config.margin);
  if (!std::isfinite(result.train_loss)) {
    throw Error(ErrorCode::NonFiniteLoss, "final training loss is not finite");
  }
  if (!validation.empty()) {
    result.validation_loss = batch_loss(net, inputs, validation, config.margin);
  }
  return result;
}

GradientCheck gradient_check(const SiameseNetwork& net,
                             std::span<const std::vector<double>> inputs,
                             std::span<const PairIndex> pairs, double margin, double epsilon) {
  std::vector<double> analytic;
  batch_loss(net, inputs, pairs, margin, &analytic);
  SiameseNetwork probe = net;
  auto params = probe.parameters();
  GradientCheck out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + epsilon;
    const double up = batch_loss(probe, inputs, pairs, margin);
    params[i] = saved - epsilon;
    const double down = batch_loss(probe, inputs, pairs, margin);
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double rel = std::abs(analytic[i] - numeric) /
                       std::max({kGradientFloor, std::abs(analytic[i]), std::abs(numeric)});
    if (rel > out.max_relative_error) {
      out.max_relative_error = rel;
      out.worst_parameter = i;
    }
    ++out.checked;
  }
  return out;
}

}  // namespace lipdyn::verifier
