#include "dlm/stats.hpp"

#include <cmath>
#include <limits>

namespace dlm {

double gaussian_aic(double rss, std::size_t n, std::size_t k) {
  if (n == 0) throw InputError("aic: no observations");
  // An exact fit would send ln(rss/n) to -inf.
  double mean_sq = std::max(rss / static_cast<double>(n), std::numeric_limits<double>::min());
  return static_cast<double>(n) * std::log(mean_sq) + 2.0 * static_cast<double>(k);
}

OlsFit ols_fit(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) {
    throw ShapeError("ols_fit: " + std::to_string(x.rows()) + " predictor rows for " +
                     std::to_string(y.size()) + " responses");
  }
  const auto n = static_cast<std::size_t>(x.rows());
  const auto k = static_cast<std::size_t>(x.cols()) + 1;
  if (n <= k) {
    throw InputError("ols_fit: need more observations (" + std::to_string(n) +
                     ") than parameters (" + std::to_string(k) + ")");
  }
  Matrix design(x.rows(), x.cols() + 1);
  design << Vector::Ones(x.rows()), x;
  Matrix response = y;
  OlsFit fit;
  try {
    fit.coefficients = solve_least_squares(design, response).col(0);
  } catch (const SingularError&) {
    throw SingularError("ols_fit: design matrix is rank deficient");
  }
  fit.rss = (design * fit.coefficients - y).squaredNorm();
  fit.n = n;
  fit.k = k;
  fit.aic = gaussian_aic(fit.rss, n, k);
  return fit;
}

double compare_aic(const OlsFit& a, const OlsFit& b) { return a.aic - b.aic; }

}  // namespace dlm
