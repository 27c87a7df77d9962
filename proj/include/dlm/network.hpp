#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dlm/linalg.hpp"
#include "dlm/linear_map.hpp"
#include "dlm/random.hpp"

namespace dlm {

enum class Activation : std::uint8_t { none = 0, relu = 1, sigmoid = 2 };
enum class Loss : std::uint8_t { mse = 0, bce = 1 };

std::string to_string(Activation a);
std::string to_string(Loss l);

struct LayerSpec {
  Eigen::Index output_dim = 1;
  Activation activation = Activation::relu;
  bool bias = true;
};

/// Affine map followed by an elementwise non-linearity.
template <typename Scalar>
struct DenseLayer {
  MatrixX<Scalar> weights;  // fan_in x fan_out
  RowVectorX<Scalar> bias;  // fan_out
  Activation activation = Activation::none;
  bool use_bias = true;
};

template <typename Scalar>
struct Network {
  std::vector<DenseLayer<Scalar>> layers;
  Direction task = Direction::comprehension;
  std::uint64_t seed = 0;

  Eigen::Index input_dim() const { return layers.front().weights.rows(); }
  Eigen::Index output_dim() const { return layers.back().weights.cols(); }
};

using DeepNetwork = Network<double>;

/// Comprehension nets are trained with MSE, production nets with BCE.
inline Loss default_loss(Direction task) {
  return task == Direction::comprehension ? Loss::mse : Loss::bce;
}

template <typename Scalar>
struct Gradients {
  std::vector<MatrixX<Scalar>> weights;
  std::vector<RowVectorX<Scalar>> bias;
};

namespace detail {

template <typename Derived>
auto activate(const Eigen::MatrixBase<Derived>& pre, Activation a) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out = pre;
  switch (a) {
    case Activation::none:
      break;
    case Activation::relu:
      out = out.cwiseMax(Scalar(0));
      break;
    case Activation::sigmoid:
      out = out.unaryExpr([](Scalar z) {
        // Split by sign to keep exp() from overflowing.
        if (z >= 0) return Scalar(1) / (Scalar(1) + std::exp(-z));
        Scalar e = std::exp(z);
        return e / (Scalar(1) + e);
      });
      break;
  }
  return out;
}

/// d(activation)/d(pre) evaluated elementwise.
template <typename Scalar>
MatrixX<Scalar> activation_slope(const MatrixX<Scalar>& pre, const MatrixX<Scalar>& post,
                                 Activation a) {
  switch (a) {
    case Activation::relu:
      return (pre.array() > Scalar(0)).template cast<Scalar>();
    case Activation::sigmoid:
      return (post.array() * (Scalar(1) - post.array())).matrix();
    case Activation::none:
      break;
  }
  return MatrixX<Scalar>::Ones(pre.rows(), pre.cols());
}

template <typename Scalar>
void check_input(const Network<Scalar>& net, Eigen::Index cols, const char* what) {
  if (net.layers.empty()) throw InputError(std::string(what) + ": network has no layers");
  if (cols != net.input_dim()) {
    throw ShapeError(std::string(what) + ": input has " + std::to_string(cols) +
                     " columns, network expects " + std::to_string(net.input_dim()));
  }
}

}  // namespace detail

/// Builds a network with Glorot-uniform weights drawn from `seed` and zero
/// biases. Comprehension nets must end without an activation, production
/// nets in a sigmoid.
template <typename Scalar = double>
Network<Scalar> make_network(Eigen::Index input_dim, std::span<const LayerSpec> specs,
                             Direction task, std::uint64_t seed) {
  if (input_dim < 1) throw InputError("make_network: input dimension must be positive");
  if (specs.empty()) throw InputError("make_network: at least one layer is required");
  Activation expected = task == Direction::comprehension ? Activation::none : Activation::sigmoid;
  if (specs.back().activation != expected) {
    throw InputError("make_network: " + to_string(task) + " networks must end in " +
                     to_string(expected));
  }
  Network<Scalar> net;
  net.task = task;
  net.seed = seed;
  Rng rng(seed);
  Eigen::Index fan_in = input_dim;
  for (const auto& spec : specs) {
    if (spec.output_dim < 1) throw InputError("make_network: layer width must be positive");
    DenseLayer<Scalar> layer;
    layer.activation = spec.activation;
    layer.use_bias = spec.bias;
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + spec.output_dim));
    layer.weights.resize(fan_in, spec.output_dim);
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
      layer.weights.data()[i] = static_cast<Scalar>((2.0 * uniform_real(rng) - 1.0) * limit);
    }
    layer.bias = RowVectorX<Scalar>::Zero(spec.output_dim);
    net.layers.push_back(std::move(layer));
    fan_in = spec.output_dim;
  }
  return net;
}

/// ReLU hidden layers of the given widths plus the task's output layer.
template <typename Scalar = double>
Network<Scalar> make_mlp(Eigen::Index input_dim, std::span<const Eigen::Index> hidden,
                         Eigen::Index output_dim, Direction task, std::uint64_t seed,
                         bool bias = true) {
  std::vector<LayerSpec> specs;
  for (auto width : hidden) specs.push_back({width, Activation::relu, bias});
  specs.push_back({output_dim,
                   task == Direction::comprehension ? Activation::none : Activation::sigmoid,
                   bias});
  return make_network<Scalar>(input_dim, specs, task, seed);
}

template <typename Scalar, typename Derived>
MatrixX<Scalar> forward(const Network<Scalar>& net, const Eigen::MatrixBase<Derived>& input) {
  detail::check_input(net, input.cols(), "forward");
  MatrixX<Scalar> h = input;
  for (const auto& layer : net.layers) {
    MatrixX<Scalar> pre = h * layer.weights;
    if (layer.use_bias) pre.rowwise() += layer.bias;
    h = detail::activate(pre, layer.activation);
  }
  return h;
}

/// Batch-mean loss: per row, squared error or binary cross-entropy summed
/// over output units, then averaged over rows.
template <typename Scalar, typename DerivedX, typename DerivedY>
Scalar loss(const Network<Scalar>& net, const Eigen::MatrixBase<DerivedX>& input,
            const Eigen::MatrixBase<DerivedY>& target, Loss kind);

template <typename Scalar>
struct BackwardResult {
  Scalar loss = 0;
  Gradients<Scalar> grads;
};

/// Gradients of the batch-mean loss with respect to every weight and bias.
template <typename Scalar, typename DerivedX, typename DerivedY>
BackwardResult<Scalar> backward(const Network<Scalar>& net, const Eigen::MatrixBase<DerivedX>& input,
                                const Eigen::MatrixBase<DerivedY>& target, Loss kind) {
  detail::check_input(net, input.cols(), "backward");
  if (target.rows() != input.rows() || target.cols() != net.output_dim()) {
    throw ShapeError("backward: target " + shape_string(target.rows(), target.cols()) +
                     " for input " + shape_string(input.rows(), input.cols()) +
                     " and output width " + std::to_string(net.output_dim()));
  }
  if (input.rows() == 0) throw ShapeError("backward: empty batch");
  const auto& last = net.layers.back();
  if (kind == Loss::bce) {
    if (last.activation != Activation::sigmoid) {
      throw InputError("backward: binary cross-entropy needs a sigmoid output layer");
    }
    if ((target.array() < 0).any() || (target.array() > 1).any()) {
      throw InputError("backward: binary cross-entropy targets must lie in [0, 1]");
    }
  }

  const std::size_t depth = net.layers.size();
  std::vector<MatrixX<Scalar>> inputs(depth), pres(depth);
  MatrixX<Scalar> h = input;
  for (std::size_t l = 0; l < depth; ++l) {
    const auto& layer = net.layers[l];
    inputs[l] = h;
    pres[l] = h * layer.weights;
    if (layer.use_bias) pres[l].rowwise() += layer.bias;
    h = detail::activate(pres[l], layer.activation);
  }

  const Scalar n = static_cast<Scalar>(input.rows());
  BackwardResult<Scalar> out;
  MatrixX<Scalar> delta;  // d loss / d pre-activation of the current layer
  if (kind == Loss::bce) {
    const auto& z = pres.back();
    out.loss = (z.cwiseMax(Scalar(0)).array() - target.array() * z.array() +
                (-z.cwiseAbs().array()).exp().log1p())
                   .sum() /
               n;
    delta = (h - target) / n;
  } else {
    MatrixX<Scalar> diff = h - target;
    out.loss = diff.squaredNorm() / n;
    delta = (Scalar(2) / n) * diff;
    delta = delta.cwiseProduct(detail::activation_slope(pres.back(), h, last.activation));
  }

  out.grads.weights.resize(depth);
  out.grads.bias.resize(depth);
  for (std::size_t l = depth; l-- > 0;) {
    const auto& layer = net.layers[l];
    out.grads.weights[l] = inputs[l].transpose() * delta;
    out.grads.bias[l] = layer.use_bias ? RowVectorX<Scalar>(delta.colwise().sum())
                                       : RowVectorX<Scalar>::Zero(layer.weights.cols());
    if (l > 0) {
      const auto& below = net.layers[l - 1];
      MatrixX<Scalar> back = delta * layer.weights.transpose();
      delta = back.cwiseProduct(detail::activation_slope(pres[l - 1], inputs[l], below.activation));
    }
  }
  return out;
}

template <typename Scalar, typename DerivedX, typename DerivedY>
Scalar loss(const Network<Scalar>& net, const Eigen::MatrixBase<DerivedX>& input,
            const Eigen::MatrixBase<DerivedY>& target, Loss kind) {
  return backward(net, input, target, kind).loss;
}

/// Plain gradient-descent update.
template <typename Scalar>
void apply_gradients(Network<Scalar>& net, const Gradients<Scalar>& grads, Scalar learning_rate) {
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    net.layers[l].weights -= learning_rate * grads.weights[l];
    if (net.layers[l].use_bias) net.layers[l].bias -= learning_rate * grads.bias[l];
  }
}

/// One backpropagation step on a single example.
template <typename Scalar>
void online_step(Network<Scalar>& net, const RowVectorX<Scalar>& cue_row,
                 const RowVectorX<Scalar>& target_row, Scalar learning_rate, Loss kind) {
  if (learning_rate == 0) {
    detail::check_input(net, cue_row.size(), "online_step");
    return;
  }
  auto result = backward(net, cue_row, target_row, kind);
  apply_gradients(net, result.grads, learning_rate);
}

template <typename Scalar>
void online_step(Network<Scalar>& net, const RowVectorX<Scalar>& cue_row,
                 const RowVectorX<Scalar>& target_row, Scalar learning_rate) {
  online_step(net, cue_row, target_row, learning_rate, default_loss(net.task));
}

template <typename Scalar>
bool parameters_finite(const Network<Scalar>& net) {
  for (const auto& layer : net.layers) {
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

/// "DLMN" container, version 1: u8 task, u64 seed, u32 layer count, then per
/// layer u8 activation, u8 bias flag, weight matrix and 1 x width bias matrix.
void save_network(const std::string& path, const DeepNetwork& net);
DeepNetwork load_network(const std::string& path);

}  // namespace dlm
