#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jshap/core.hpp"
#include "jshap/rng.hpp"

namespace jshap {

enum class OutputActivation { identity, sigmoid };
enum class LossKind { mse, bce };

/// Dense feed-forward net with relu hidden units. Forward passes are
/// deterministic; trained nets are treated as immutable values.
class FeedForwardNet {
 public:
  FeedForwardNet() = default;

  /// Small random weights, bit-reproducible per seed.
  static FeedForwardNet init(std::vector<int> widths, std::uint64_t seed,
                             OutputActivation output = OutputActivation::identity);

  double forward(std::span<const double> input) const;
  double operator()(const DataPoint& x) const { return forward(x.values()); }

  int input_width() const { return widths_.front(); }
  const std::vector<int>& widths() const { return widths_; }
  OutputActivation output_activation() const { return output_; }
  std::size_t parameter_count() const;

  /// Flat parameter view, layer by layer: weights row-major, then biases.
  std::vector<double> parameters() const;
  void set_parameters(const std::vector<double>& flat);

  std::string to_json_string() const;
  static FeedForwardNet from_json_string(const std::string& text);

 private:
  friend struct NetGradients;
  std::vector<int> widths_;
  // weights_[l] has widths_[l+1] x widths_[l] entries, row-major.
  std::vector<std::vector<double>> weights_;
  std::vector<std::vector<double>> biases_;
  OutputActivation output_ = OutputActivation::identity;
};

/// One labeled example. `weight` scales its loss term; composite objectives
/// (fidelity vs attack) are expressed through per-example weights.
struct TrainExample {
  std::vector<double> input;
  double target = 0.0;
  double weight = 1.0;
};

struct TrainerConfig {
  double learning_rate = 0.05;
  int batch_size = 32;
  int epochs = 100;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::mse;
};

struct TrainResult {
  FeedForwardNet net;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_losses;
};

/// Weighted mean loss of the net over a set of examples.
double evaluate_loss(const FeedForwardNet& net, const std::vector<TrainExample>& data,
                     LossKind loss);

/// Plain minibatch SGD with a fixed learning rate. Gradients come from
/// backpropagation; a non-finite batch loss raises TrainingFailure carrying
/// the global batch index. Reproducible bit-for-bit given equal seeds.
TrainResult sgd_train(FeedForwardNet net, const std::vector<TrainExample>& data,
                      const TrainerConfig& cfg);

/// Wraps a net as a ScalarField (kind "feedforward").
ScalarField net_field(FeedForwardNet net);

}  // namespace jshap
