#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace lipdyn::verifier {

struct NetworkConfig {
  int input_dim = 476;
  int channels = 8;       // convolution filters
  int kernel = 5;
  int pool_bins = 1;      // 1 = global average pooling
  int embedding_dim = 32;

  bool operator==(const NetworkConfig&) const = default;
};

/// Throws InvalidConfig.
void validate(const NetworkConfig& config);

/// One twin of the Siamese pair: valid 1-D convolution, ReLU, average
/// pooling, dense projection. Both twins are this object, so their weights
/// share one storage by construction.
class SiameseNetwork {
 public:
  explicit SiameseNetwork(const NetworkConfig& config = {});

  const NetworkConfig& config() const { return config_; }
  int conv_length() const { return config_.input_dim - config_.kernel + 1; }
  int pooled_size() const { return config_.channels * config_.pool_bins; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  /// He-normal weights, zero biases.
  void initialize(std::uint64_t seed);

  /// Intermediate values kept for backpropagation.
  struct Activations {
    std::vector<double> pre;     // channels x conv_length, before ReLU
    std::vector<double> pooled;  // channels x pool_bins
  };

  /// Throws DimensionMismatch.
  std::vector<double> embed(std::span<const double> input) const;
  std::vector<double> embed(std::span<const double> input, Activations& activations) const;

  /// Adds d(loss)/d(params) to `grad` given d(loss)/d(embedding).
  void backward(std::span<const double> input, std::span<const double> grad_embedding,
                std::span<double> grad) const;
  /// Same, reusing the activations of a previous embed of `input`.
  void backward(std::span<const double> input, const Activations& activations,
                std::span<const double> grad_embedding, std::span<double> grad) const;

 private:
  std::vector<double> forward(std::span<const double> input, Activations* cache) const;
  void check_input(std::span<const double> input) const;
  std::pair<int, int> bin_range(int bin) const;

  NetworkConfig config_;
  std::vector<double> params_;
  std::size_t conv_w_ = 0, conv_b_ = 0, dense_w_ = 0, dense_b_ = 0;
};

double distance(std::span<const double> a, std::span<const double> b);

/// y d^2 + (1 - y) max(0, m - d)^2 with y = 1 for same-subject pairs.
double contrastive_loss(double d, bool same, double margin);

struct PairIndex {
  std::size_t a = 0;
  std::size_t b = 0;
  bool same = false;
};

/// Mean contrastive loss over `pairs` (indices into `inputs`). When `grad`
/// is given it receives the gradient of that mean, overwriting its content.
double batch_loss(const SiameseNetwork& net, std::span<const std::vector<double>> inputs,
                  std::span<const PairIndex> pairs, double margin,
                  std::vector<double>* grad = nullptr);

struct TrainConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  int batch_size = 32;
  int epochs = 50;
  double margin = 1.0;
  std::uint64_t seed = 1;

  bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& config);

struct TrainResult {
  double train_loss = 0.0;
  std::optional<double> validation_loss;
};

/// Momentum SGD on shuffled mini-batches. Throws NoPositivePairs,
/// NoNegativePairs, NonFiniteLoss.
TrainResult train(SiameseNetwork& net, std::span<const std::vector<double>> inputs,
                  std::span<const PairIndex> pairs, const TrainConfig& config,
                  std::span<const PairIndex> validation = {});

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t worst_parameter = 0;
  std::size_t checked = 0;
};

/// Gradients below this magnitude are compared in absolute terms. Shared
/// output biases cancel in the pair distance, so their exact gradient is 0
/// and the finite difference there is pure rounding noise.
inline constexpr double kGradientFloor = 1e-6;

/// Central finite differences of batch_loss against backprop, as
/// |analytic - numeric| / max(floor, |analytic|, |numeric|).
GradientCheck gradient_check(const SiameseNetwork& net,
                             std::span<const std::vector<double>> inputs,
                             std::span<const PairIndex> pairs, double margin,
                             double epsilon = 1e-4);

}  // namespace lipdyn::verifier
