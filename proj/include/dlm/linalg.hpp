#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "dlm/errors.hpp"

namespace dlm {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using RowVector = RowVectorX<double>;

inline std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

/// Matrix product with an explicit shape check (Eigen only asserts in debug).
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> matmul(const Eigen::MatrixBase<DerivedA>& a,
                                          const Eigen::MatrixBase<DerivedB>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + shape_string(a.rows(), a.cols()) + " by " +
                     shape_string(b.rows(), b.cols()));
  }
  MatrixX<typename DerivedA::Scalar> out = a * b;
  return out;
}

template <typename Scalar>
struct LeastSquaresConfig {
  /// Absolute Tikhonov penalty on ||B||_F^2.
  Scalar ridge_lambda = 0;
  /// Per-row non-negative weights; unit weights when absent.
  std::optional<VectorX<Scalar>> weights;
};

namespace detail {

template <typename Scalar>
void check_weights(const VectorX<Scalar>& w, Eigen::Index rows) {
  if (w.size() != rows) {
    throw ShapeError("least squares: " + std::to_string(w.size()) + " weights for " +
                     std::to_string(rows) + " rows");
  }
  if (!w.allFinite() || (w.array() < 0).any()) {
    throw InputError("least squares: weights must be finite and non-negative");
  }
  if (!(w.array() > 0).any()) {
    throw InputError("least squares: at least one weight must be positive");
  }
}

}  // namespace detail

/// Converts a ridge expressed relative to the mean diagonal of X'WX into an
/// absolute lambda. Rescaling the weights rescales lambda with them, so the
/// minimiser is unchanged.
template <typename DerivedX, typename Scalar = typename DerivedX::Scalar>
Scalar relative_ridge(const Eigen::MatrixBase<DerivedX>& x, Scalar relative,
                      const std::optional<VectorX<Scalar>>& weights = std::nullopt) {
  if (x.cols() == 0) return relative;
  VectorX<Scalar> row_sq = x.rowwise().squaredNorm();
  Scalar trace = weights ? row_sq.dot(*weights) : row_sq.sum();
  if (!(trace > 0)) return relative;
  return relative * trace / static_cast<Scalar>(x.cols());
}

/// Minimises sum_i w_i ||x_i B - y_i||^2 + lambda ||B||_F^2 through the
/// Cholesky factorisation of the normal equations.
template <typename DerivedX, typename DerivedY>
MatrixX<typename DerivedX::Scalar> solve_least_squares(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y,
    const LeastSquaresConfig<typename DerivedX::Scalar>& cfg = {}) {
  using Scalar = typename DerivedX::Scalar;
  if (x.rows() != y.rows()) {
    throw ShapeError("least squares: design " + shape_string(x.rows(), x.cols()) +
                     " and response " + shape_string(y.rows(), y.cols()) + " differ in rows");
  }
  if (!(cfg.ridge_lambda >= 0) || !std::isfinite(cfg.ridge_lambda)) {
    throw InputError("least squares: ridge lambda must be finite and non-negative");
  }

  MatrixX<Scalar> weighted = x;
  if (cfg.weights) {
    detail::check_weights(*cfg.weights, x.rows());
    weighted = weighted.array().colwise() * cfg.weights->array();
  }
  MatrixX<Scalar> normal = x.transpose() * weighted;
  MatrixX<Scalar> rhs = weighted.transpose() * y;
  normal.diagonal().array() += cfg.ridge_lambda;

  Eigen::LLT<MatrixX<Scalar>> llt(normal);
  bool singular = llt.info() != Eigen::Success;
  if (!singular && normal.rows() > 0) {
    // LLT only fails on non-positive pivots; near-zero ones still mean rank loss.
    auto pivots = llt.matrixLLT().diagonal().array().square();
    Scalar scale = normal.diagonal().cwiseAbs().maxCoeff();
    singular = pivots.minCoeff() <= Scalar(1e-12) * scale;
  }
  if (singular) {
    throw SingularError("least squares: normal equations of a " +
                        shape_string(x.rows(), x.cols()) +
                        " design are singular; use a positive ridge");
  }
  MatrixX<Scalar> b = llt.solve(rhs);
  if (!b.allFinite()) {
    throw SingularError("least squares: solution is not finite; use a positive ridge");
  }
  return b;
}

/// Pearson correlation. Zero-variance input yields 0.
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar pearson(const Eigen::MatrixBase<DerivedU>& u,
                                  const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  if (u.size() != v.size()) {
    throw ShapeError("pearson: lengths " + std::to_string(u.size()) + " and " +
                     std::to_string(v.size()) + " differ");
  }
  if (u.size() < 2) throw ShapeError("pearson: need at least two values");
  auto du = (u.array() - u.mean()).matrix().eval();
  auto dv = (v.array() - v.mean()).matrix().eval();
  Scalar suu = du.squaredNorm();
  Scalar svv = dv.squaredNorm();
  if (suu == 0 || svv == 0) return 0;
  Scalar r = du.dot(dv) / std::sqrt(suu * svv);
  return std::clamp(r, Scalar(-1), Scalar(1));
}

/// Rows centred and scaled to unit norm; constant rows become zero rows.
template <typename Derived>
MatrixX<typename Derived::Scalar> standardize_rows(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> z = m;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    z.row(i).array() -= z.row(i).mean();
    Scalar n = z.row(i).norm();
    if (n > 0) {
      z.row(i) /= n;
    } else {
      z.row(i).setZero();
    }
  }
  return z;
}

/// Pearson correlation of every row of `a` against every row of `b`.
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> row_correlations(const Eigen::MatrixBase<DerivedA>& a,
                                                    const Eigen::MatrixBase<DerivedB>& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("row correlations: " + shape_string(a.rows(), a.cols()) + " vs " +
                     shape_string(b.rows(), b.cols()));
  }
  if (a.cols() < 2) throw ShapeError("row correlations: need at least two columns");
  MatrixX<typename DerivedA::Scalar> r = standardize_rows(a) * standardize_rows(b).transpose();
  return r.cwiseMax(-1).cwiseMin(1);
}

}  // namespace dlm
