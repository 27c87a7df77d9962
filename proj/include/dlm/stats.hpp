#pragma once

#include <span>

#include "dlm/linalg.hpp"

namespace dlm {

struct OlsFit {
  Vector coefficients;  ///< intercept first, then one per predictor column
  double rss = 0;
  std::size_t n = 0;
  std::size_t k = 0;  ///< parameters including the intercept
  double aic = 0;
};

/// Gaussian log-likelihood AIC without small-sample correction.
double gaussian_aic(double rss, std::size_t n, std::size_t k);

/// Ordinary least squares of y on an intercept plus the columns of x.
OlsFit ols_fit(const Matrix& x, const Vector& y);

/// aic_a - aic_b; negative means model a is preferred.
double compare_aic(const OlsFit& a, const OlsFit& b);

}  // namespace dlm
