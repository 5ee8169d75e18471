#include "jshap/learners.hpp"

#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>

#include <json.hpp>

namespace jshap {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double apply_output(OutputActivation out, double z) {
  return out == OutputActivation::sigmoid ? sigmoid(z) : z;
}

// Forward pass keeping post-activation values of every layer.
struct ForwardTrace {
  std::vector<std::vector<double>> activations;  // [0] = input, back() = output
};

}  // namespace

// Gradient scratch space; lives in the .cpp so the header stays lean.
struct NetGradients {
  std::vector<std::vector<double>> d_weights;
  std::vector<std::vector<double>> d_biases;

  explicit NetGradients(const FeedForwardNet& net) {
    d_weights.resize(net.weights_.size());
    d_biases.resize(net.biases_.size());
    for (std::size_t l = 0; l < net.weights_.size(); ++l) {
      d_weights[l].assign(net.weights_[l].size(), 0.0);
      d_biases[l].assign(net.biases_[l].size(), 0.0);
    }
  }

  void clear() {
    for (auto& w : d_weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : d_biases) std::fill(b.begin(), b.end(), 0.0);
  }

  static ForwardTrace forward_trace(const FeedForwardNet& net,
                                    std::span<const double> input) {
    ForwardTrace trace;
    trace.activations.emplace_back(input.begin(), input.end());
    const std::size_t layers = net.weights_.size();
    for (std::size_t l = 0; l < layers; ++l) {
      const int in_w = net.widths_[l];
      const int out_w = net.widths_[l + 1];
      std::vector<double> next(static_cast<std::size_t>(out_w));
      const auto& prev = trace.activations.back();
      for (int r = 0; r < out_w; ++r) {
        double z = net.biases_[l][static_cast<std::size_t>(r)];
        const double* row = net.weights_[l].data() + static_cast<std::size_t>(r) * in_w;
        for (int c = 0; c < in_w; ++c) z += row[c] * prev[static_cast<std::size_t>(c)];
        const bool hidden = l + 1 < layers;
        next[static_cast<std::size_t>(r)] =
            hidden ? (z > 0.0 ? z : 0.0) : apply_output(net.output_, z);
      }
      trace.activations.push_back(std::move(next));
    }
    return trace;
  }

  // Accumulates d(loss_example)/d(params) scaled by `scale`, returns the
  // example loss. For bce the output activation must be sigmoid; the gradient
  // at the output pre-activation then reduces to (y - t).
  double accumulate(const FeedForwardNet& net, const TrainExample& ex, LossKind loss,
                    double scale) {
    ForwardTrace trace = forward_trace(net, ex.input);
    const double y = trace.activations.back()[0];
    double example_loss;
    double dz_out;
    if (loss == LossKind::mse) {
      const double err = y - ex.target;
      example_loss = err * err;
      double dy = 2.0 * err;
      dz_out = net.output_ == OutputActivation::sigmoid ? dy * y * (1.0 - y) : dy;
    } else {
      const double eps = 1e-12;
      const double yc = std::min(std::max(y, eps), 1.0 - eps);
      example_loss = -(ex.target * std::log(yc) + (1.0 - ex.target) * std::log(1.0 - yc));
      dz_out = y - ex.target;
    }

    const std::size_t layers = net.weights_.size();
    std::vector<double> delta{dz_out};
    for (std::size_t l = layers; l-- > 0;) {
      const int in_w = net.widths_[l];
      const int out_w = net.widths_[l + 1];
      const auto& prev = trace.activations[l];
      for (int r = 0; r < out_w; ++r) {
        const double g = delta[static_cast<std::size_t>(r)] * scale;
        d_biases[l][static_cast<std::size_t>(r)] += g;
        double* row = d_weights[l].data() + static_cast<std::size_t>(r) * in_w;
        for (int c = 0; c < in_w; ++c) row[c] += g * prev[static_cast<std::size_t>(c)];
      }
      if (l == 0) break;
      std::vector<double> prev_delta(static_cast<std::size_t>(in_w), 0.0);
      for (int c = 0; c < in_w; ++c) {
        if (prev[static_cast<std::size_t>(c)] <= 0.0) continue;  // relu gate
        double acc = 0.0;
        for (int r = 0; r < out_w; ++r) {
          acc += net.weights_[l][static_cast<std::size_t>(r) * in_w + c] *
                 delta[static_cast<std::size_t>(r)];
        }
        prev_delta[static_cast<std::size_t>(c)] = acc;
      }
      delta = std::move(prev_delta);
    }
    return example_loss;
  }

  void apply(FeedForwardNet& net, double learning_rate) const {
    for (std::size_t l = 0; l < net.weights_.size(); ++l) {
      for (std::size_t k = 0; k < net.weights_[l].size(); ++k) {
        net.weights_[l][k] -= learning_rate * d_weights[l][k];
      }
      for (std::size_t k = 0; k < net.biases_[l].size(); ++k) {
        net.biases_[l][k] -= learning_rate * d_biases[l][k];
      }
    }
  }
};

FeedForwardNet FeedForwardNet::init(std::vector<int> widths, std::uint64_t seed,
                                    OutputActivation output) {
  if (widths.size() < 2) throw InvalidInputError("a net needs at least two widths");
  for (int w : widths) {
    if (w < 1) throw InvalidInputError("layer widths must be positive");
  }
  if (widths.back() != 1) throw InvalidInputError("output width must be one");
  FeedForwardNet net;
  net.widths_ = std::move(widths);
  net.output_ = output;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < net.widths_.size(); ++l) {
    const int in_w = net.widths_[l];
    const int out_w = net.widths_[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_w));
    std::vector<double> w(static_cast<std::size_t>(in_w) * out_w);
    for (double& v : w) v = rng.uniform(-scale, scale);
    net.weights_.push_back(std::move(w));
    net.biases_.emplace_back(static_cast<std::size_t>(out_w), 0.0);
  }
  return net;
}

double FeedForwardNet::forward(std::span<const double> input) const {
  if (static_cast<int>(input.size()) != widths_.front()) {
    throw InvalidInputError("net input width mismatch");
  }
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> next;
  const std::size_t layers = weights_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const int in_w = widths_[l];
    const int out_w = widths_[l + 1];
    next.assign(static_cast<std::size_t>(out_w), 0.0);
    for (int r = 0; r < out_w; ++r) {
      double z = biases_[l][static_cast<std::size_t>(r)];
      const double* row = weights_[l].data() + static_cast<std::size_t>(r) * in_w;
      for (int c = 0; c < in_w; ++c) z += row[c] * cur[static_cast<std::size_t>(c)];
      const bool hidden = l + 1 < layers;
      next[static_cast<std::size_t>(r)] =
          hidden ? (z > 0.0 ? z : 0.0) : apply_output(output_, z);
    }
    cur.swap(next);
  }
  return cur[0];
}

std::size_t FeedForwardNet::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += weights_[l].size() + biases_[l].size();
  }
  return n;
}

std::vector<double> FeedForwardNet::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    flat.insert(flat.end(), weights_[l].begin(), weights_[l].end());
    flat.insert(flat.end(), biases_[l].begin(), biases_[l].end());
  }
  return flat;
}

void FeedForwardNet::set_parameters(const std::vector<double>& flat) {
  if (flat.size() != parameter_count()) {
    throw InvalidInputError("parameter vector size mismatch");
  }
  std::size_t k = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    for (double& w : weights_[l]) w = flat[k++];
    for (double& b : biases_[l]) b = flat[k++];
  }
}

std::string FeedForwardNet::to_json_string() const {
  nlohmann::json j;
  j["widths"] = widths_;
  j["output"] = output_ == OutputActivation::sigmoid ? "sigmoid" : "identity";
  j["weights"] = weights_;
  j["biases"] = biases_;
  return j.dump(2);
}

FeedForwardNet FeedForwardNet::from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  FeedForwardNet net;
  net.widths_ = j.at("widths").get<std::vector<int>>();
  net.output_ = j.at("output").get<std::string>() == "sigmoid"
                    ? OutputActivation::sigmoid
                    : OutputActivation::identity;
  net.weights_ = j.at("weights").get<std::vector<std::vector<double>>>();
  net.biases_ = j.at("biases").get<std::vector<std::vector<double>>>();
  if (net.widths_.size() < 2 || net.weights_.size() != net.widths_.size() - 1 ||
      net.biases_.size() != net.weights_.size()) {
    throw InvalidInputError("malformed net document");
  }
  return net;
}

double evaluate_loss(const FeedForwardNet& net, const std::vector<TrainExample>& data,
                     LossKind loss) {
  double total = 0.0;
  double weight = 0.0;
  for (const TrainExample& ex : data) {
    const double y = net.forward(ex.input);
    double l;
    if (loss == LossKind::mse) {
      const double err = y - ex.target;
      l = err * err;
    } else {
      const double eps = 1e-12;
      const double yc = std::min(std::max(y, eps), 1.0 - eps);
      l = -(ex.target * std::log(yc) + (1.0 - ex.target) * std::log(1.0 - yc));
    }
    total += ex.weight * l;
    weight += ex.weight;
  }
  if (weight <= 0.0) throw InvalidInputError("no training weight");
  return total / weight;
}

TrainResult sgd_train(FeedForwardNet net, const std::vector<TrainExample>& data,
                      const TrainerConfig& cfg) {
  if (data.empty()) throw InvalidInputError("empty training set");
  if (cfg.epochs < 1) throw InvalidInputError("epochs must be >= 1");
  if (cfg.learning_rate <= 0.0) throw InvalidInputError("learning rate must be positive");
  if (cfg.batch_size < 1) throw InvalidInputError("batch size must be >= 1");
  if (cfg.loss == LossKind::bce && net.output_activation() != OutputActivation::sigmoid) {
    throw ConfigError("bce loss requires a sigmoid output");
  }
  for (const TrainExample& ex : data) {
    if (static_cast<int>(ex.input.size()) != net.input_width()) {
      throw InvalidInputError("training input width mismatch");
    }
  }

  TrainResult result;
  result.initial_loss = evaluate_loss(net, data, cfg.loss);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  NetGradients grads(net);
  std::size_t batch_counter = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    double epoch_weight = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      grads.clear();
      double batch_weight = 0.0;
      for (std::size_t k = start; k < stop; ++k) batch_weight += data[order[k]].weight;
      if (batch_weight <= 0.0) continue;
      double batch_loss = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const TrainExample& ex = data[order[k]];
        batch_loss += ex.weight *
                      grads.accumulate(net, ex, cfg.loss, ex.weight / batch_weight);
      }
      batch_loss /= batch_weight;
      if (!std::isfinite(batch_loss)) {
        throw TrainingFailure("training loss became non-finite", batch_counter);
      }
      grads.apply(net, cfg.learning_rate);
      epoch_loss += batch_loss * batch_weight;
      epoch_weight += batch_weight;
      ++batch_counter;
    }
    result.epoch_losses.push_back(epoch_weight > 0.0 ? epoch_loss / epoch_weight : 0.0);
  }
  result.final_loss = evaluate_loss(net, data, cfg.loss);
  result.net = std::move(net);
  return result;
}

ScalarField net_field(FeedForwardNet net) {
  return ScalarField::from_function(
      "feedforward", [net = std::move(net)](const DataPoint& x) { return net(x); });
}

}  // namespace jshap
