#pragma once

// Independent reference computations shared by the unit and acceptance
// suites. Nothing here calls into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <vector>

#include "dlm/network.hpp"

namespace dlm::oracle {

/// Loss recomputed from the forward pass output alone.
inline double loss_from_output(const Matrix& out, const Matrix& target, Loss kind) {
  const double n = static_cast<double>(out.rows());
  if (kind == Loss::mse) return (out - target).squaredNorm() / n;
  double total = 0;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    double p = out.data()[i], y = target.data()[i];
    total -= y * std::log(p) + (1 - y) * std::log(1 - p);
  }
  return total / n;
}

inline double net_loss(const DeepNetwork& net, const Matrix& x, const Matrix& y, Loss kind) {
  return loss_from_output(forward(net, x), y, kind);
}

/// Largest relative deviation between backprop gradients and central
/// differences with step h. The denominator is floored at `floor` so that
/// vanishing gradients are judged on an absolute scale.
inline double gradient_check(const DeepNetwork& net, const Matrix& x, const Matrix& y, Loss kind,
                             double h = 1e-5, double floor = 1e-3) {
  auto analytic = backward(net, x, y, kind).grads;
  DeepNetwork probe = net;
  double worst = 0;
  auto compare = [&](double& param, double g) {
    double saved = param;
    param = saved + h;
    double up = net_loss(probe, x, y, kind);
    param = saved - h;
    double down = net_loss(probe, x, y, kind);
    param = saved;
    double fd = (up - down) / (2 * h);
    double scale = std::max({std::abs(fd), std::abs(g), floor});
    worst = std::max(worst, std::abs(fd - g) / scale);
  };
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    auto& layer = probe.layers[l];
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
      compare(layer.weights.data()[i], analytic.weights[l].data()[i]);
    }
    if (!layer.use_bias) continue;
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      compare(layer.bias.data()[i], analytic.bias[l].data()[i]);
    }
  }
  return worst;
}

/// Rank of each item's own target among all candidates by Pearson
/// correlation, via explicit means and sums; ties with the own target count
/// against it.
struct BruteRank {
  std::vector<std::size_t> rank;
  std::vector<bool> correct;
};

inline double brute_pearson(const RowVector& u, const RowVector& v) {
  const auto n = static_cast<double>(u.size());
  double mu = u.sum() / n, mv = v.sum() / n;
  double suv = 0, suu = 0, svv = 0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    suv += (u(i) - mu) * (v(i) - mv);
    suu += (u(i) - mu) * (u(i) - mu);
    svv += (v(i) - mv) * (v(i) - mv);
  }
  if (suu == 0 || svv == 0) return 0;
  return suv / std::sqrt(suu * svv);
}

inline BruteRank brute_force_ranks(const Matrix& predictions, const Matrix& candidates,
                                   const std::vector<std::size_t>& own) {
  BruteRank out;
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    auto self = static_cast<Eigen::Index>(own[static_cast<std::size_t>(i)]);
    double target = brute_pearson(predictions.row(i), candidates.row(self));
    std::size_t above = 0;
    bool tie = false;
    for (Eigen::Index j = 0; j < candidates.rows(); ++j) {
      if (j == self) continue;
      double r = brute_pearson(predictions.row(i), candidates.row(j));
      if (r > target + 1e-12) {
        ++above;
      } else if (std::abs(r - target) <= 1e-12) {
        tie = true;
      }
    }
    out.rank.push_back(above + 1);
    out.correct.push_back(above == 0 && !tie);
  }
  return out;
}

/// Least-squares predictions via the SVD pseudo-inverse.
inline Matrix pinv_predictions(const Matrix& x, const Matrix& y) {
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return x * svd.solve(y);
}

/// Fraction of rows whose prediction is strictly most correlated with their
/// own target among all targets.
inline double brute_accuracy(const Matrix& predictions, const Matrix& targets) {
  std::vector<std::size_t> own(static_cast<std::size_t>(targets.rows()));
  for (std::size_t i = 0; i < own.size(); ++i) own[i] = i;
  auto r = brute_force_ranks(predictions, targets, own);
  return static_cast<double>(std::count(r.correct.begin(), r.correct.end(), true)) /
         static_cast<double>(own.size());
}

}  // namespace dlm::oracle
