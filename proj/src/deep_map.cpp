#include "dlm/deep_map.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>

#include "dlm/evaluate.hpp"
#include "dlm/io.hpp"

namespace dlm {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::none:
      return "none";
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
  }
  return "unknown";
}

std::string to_string(Loss l) { return l == Loss::mse ? "mse" : "bce"; }

void TrainConfig::validate() const {
  if (batch_size == 0) throw InputError("train config: batch size must be positive");
  if (max_epochs == 0 || fixed_epochs == 0 || token_epochs == 0) {
    throw InputError("train config: epoch counts must be positive");
  }
  if (patience > max_epochs) throw InputError("train config: patience exceeds max epochs");
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) {
    throw InputError("train config: learning rate must be finite and non-negative");
  }
  if (token_cap == 0) throw InputError("train config: token cap must be positive");
}

namespace {

void check_pair(const DeepNetwork& net, const Matrix& x, const Matrix& y, const char* what) {
  if (x.rows() != y.rows()) {
    throw ShapeError(std::string(what) + ": " + std::to_string(x.rows()) + " inputs but " +
                     std::to_string(y.rows()) + " targets");
  }
  if (x.rows() > 0 && (x.cols() != net.input_dim() || y.cols() != net.output_dim())) {
    throw ShapeError(std::string(what) + ": data " + shape_string(x.rows(), x.cols()) + " -> " +
                     shape_string(y.rows(), y.cols()) + " does not fit network " +
                     shape_string(net.input_dim(), net.output_dim()));
  }
}

// One pass of minibatch updates over `order` (indices into x/y).
void run_batches(DeepNetwork& net, const Matrix& x, const Matrix& y,
                 const std::vector<std::size_t>& order, const TrainConfig& cfg, Loss kind) {
  std::vector<Eigen::Index> batch;
  batch.reserve(cfg.batch_size);
  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
    std::size_t end = std::min(order.size(), start + cfg.batch_size);
    batch.assign(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(end));
    Matrix bx = x(batch, Eigen::all);
    Matrix by = y(batch, Eigen::all);
    auto result = backward(net, bx, by, kind);
    apply_gradients(net, result.grads, cfg.learning_rate);
  }
}

double checked_loss(const DeepNetwork& net, const Matrix& x, const Matrix& y, Loss kind,
                    std::size_t epoch) {
  double value = loss(net, x, y, kind);
  if (!std::isfinite(value) || !parameters_finite(net)) {
    throw TrainingError("training diverged at epoch " + std::to_string(epoch) +
                        " (non-finite loss); lower the learning rate");
  }
  return value;
}

}  // namespace

TrainHistory train(DeepNetwork& net, const Matrix& train_input, const Matrix& train_target,
                   const Matrix& val_input, const Matrix& val_target, const TrainConfig& cfg) {
  cfg.validate();
  check_pair(net, train_input, train_target, "train");
  check_pair(net, val_input, val_target, "train (validation)");
  if (train_input.rows() == 0) throw InputError("train: empty training set");
  const bool early = cfg.epoch_cap == EpochCap::early_stop;
  if (early && val_input.rows() == 0) {
    throw InputError("train: early stopping needs a validation set");
  }
  const Loss kind = cfg.loss.value_or(default_loss(net.task));

  const Eigen::Index n_val = val_input.rows();
  Matrix candidates(n_val + train_target.rows(), train_target.cols());
  if (n_val > 0) candidates << val_target, train_target;
  std::vector<std::size_t> own(static_cast<std::size_t>(n_val));
  std::iota(own.begin(), own.end(), 0);

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(static_cast<std::size_t>(train_input.rows()));
  std::iota(order.begin(), order.end(), 0);

  TrainHistory history;
  const std::size_t epochs = early ? cfg.max_epochs : cfg.fixed_epochs;
  double best_acc = -std::numeric_limits<double>::infinity();
  DeepNetwork best = net;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    shuffle(order, rng);
    run_batches(net, train_input, train_target, order, cfg, kind);

    EpochRecord rec{epoch, checked_loss(net, train_input, train_target, kind, epoch), {}};
    if (n_val > 0) {
      rec.val_accuracy = correlation_accuracy(forward(net, val_input), candidates, own).accuracy;
    }
    history.epochs.push_back(rec);

    if (!early) {
      history.best_epoch = epoch;
      continue;
    }
    if (*rec.val_accuracy > best_acc) {
      best_acc = *rec.val_accuracy;
      best = net;
      history.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= cfg.patience) {
      history.stopped_early = epoch < epochs;
      break;
    }
  }
  if (early) net = std::move(best);
  return history;
}

std::vector<std::size_t> token_list(std::span<const double> frequencies, std::uint64_t cap,
                                    Rng& rng) {
  double total = 0;
  for (double f : frequencies) {
    if (!(f >= 0) || f != std::floor(f) || !std::isfinite(f)) {
      throw InputError("token distribution: frequencies must be non-negative integers");
    }
    total += f;
  }
  if (total == 0) throw InputError("token distribution: frequencies sum to zero");

  std::vector<std::size_t> tokens;
  if (total <= static_cast<double>(cap)) {
    tokens.reserve(static_cast<std::size_t>(total));
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
      tokens.insert(tokens.end(), static_cast<std::size_t>(frequencies[i]), i);
    }
    shuffle(tokens, rng);
    return tokens;
  }

  // Too many tokens to expand: draw `cap` of them with probability
  // proportional to frequency, which keeps each word's expected share.
  std::vector<double> cumulative(frequencies.size());
  std::partial_sum(frequencies.begin(), frequencies.end(), cumulative.begin());
  tokens.reserve(cap);
  for (std::uint64_t t = 0; t < cap; ++t) {
    double u = uniform_real(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        it - cumulative.begin(), static_cast<std::ptrdiff_t>(frequencies.size()) - 1));
    tokens.push_back(idx);
  }
  return tokens;
}

TrainHistory train_token_distribution(DeepNetwork& net, const Matrix& input, const Matrix& target,
                                      std::span<const double> frequencies,
                                      const TrainConfig& cfg) {
  cfg.validate();
  check_pair(net, input, target, "train_token_distribution");
  if (static_cast<Eigen::Index>(frequencies.size()) != input.rows()) {
    throw ShapeError("train_token_distribution: " + std::to_string(frequencies.size()) +
                     " frequencies for " + std::to_string(input.rows()) + " rows");
  }
  const Loss kind = cfg.loss.value_or(default_loss(net.task));
  Rng rng(cfg.seed);
  TrainHistory history;
  for (std::size_t epoch = 1; epoch <= cfg.token_epochs; ++epoch) {
    auto tokens = token_list(frequencies, cfg.token_cap, rng);
    run_batches(net, input, target, tokens, cfg, kind);
    history.epochs.push_back({epoch, checked_loss(net, input, target, kind, epoch), {}});
    history.best_epoch = epoch;
  }
  return history;
}

void save_network(const std::string& path, const DeepNetwork& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  io::BinaryWriter w(out);
  w.magic("DLMN", 1);
  w.u8(static_cast<std::uint8_t>(net.task));
  w.u64(net.seed);
  w.u32(static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& layer : net.layers) {
    w.u8(static_cast<std::uint8_t>(layer.activation));
    w.u8(layer.use_bias ? 1 : 0);
    w.matrix(layer.weights);
    w.matrix(Matrix(layer.bias));
  }
}

DeepNetwork load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  io::BinaryReader r(in, path);
  if (auto v = r.magic("DLMN"); v != 1) {
    throw ParseError(path + ": unsupported network version " + std::to_string(v));
  }
  DeepNetwork net;
  auto task = r.u8();
  if (task > 1) throw ParseError(path + ": bad task tag");
  net.task = static_cast<Direction>(task);
  net.seed = r.u64();
  auto count = r.u32();
  if (count == 0 || count > 1024) throw ParseError(path + ": bad layer count");
  Eigen::Index fan_in = -1;
  for (std::uint32_t l = 0; l < count; ++l) {
    DenseLayer<double> layer;
    auto act = r.u8();
    if (act > 2) throw ParseError(path + ": bad activation tag");
    layer.activation = static_cast<Activation>(act);
    layer.use_bias = r.u8() != 0;
    layer.weights = r.matrix();
    Matrix bias = r.matrix();
    if (bias.rows() != 1 || bias.cols() != layer.weights.cols() ||
        (fan_in >= 0 && layer.weights.rows() != fan_in)) {
      throw ParseError(path + ": layer " + std::to_string(l) + " dimensions do not chain");
    }
    layer.bias = bias.row(0);
    fan_in = layer.weights.cols();
    net.layers.push_back(std::move(layer));
  }
  return net;
}

}  // namespace dlm
