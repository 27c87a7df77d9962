#include "dlm/evaluate.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "dlm/io.hpp"

namespace dlm {

namespace {

// Bounds the predictions x candidates correlation block held in memory.
constexpr Eigen::Index kBlockRows = 1024;

}  // namespace

EvalReport correlation_accuracy(const Matrix& predictions, const Matrix& candidates,
                                std::span<const std::size_t> target_index, std::size_t k) {
  if (static_cast<Eigen::Index>(target_index.size()) != predictions.rows()) {
    throw ShapeError("correlation_accuracy: " + std::to_string(target_index.size()) +
                     " target indices for " + std::to_string(predictions.rows()) + " predictions");
  }
  if (predictions.cols() != candidates.cols()) {
    throw ShapeError("correlation_accuracy: predictions " +
                     shape_string(predictions.rows(), predictions.cols()) + " vs candidates " +
                     shape_string(candidates.rows(), candidates.cols()));
  }
  if (k == 0) throw InputError("correlation_accuracy: k must be at least 1");
  for (auto idx : target_index) {
    if (idx >= static_cast<std::size_t>(candidates.rows())) {
      throw InputError("correlation_accuracy: target index " + std::to_string(idx) +
                       " outside " + std::to_string(candidates.rows()) + " candidates");
    }
  }

  EvalReport report;
  report.n_items = target_index.size();
  report.k = k;
  report.per_item.resize(report.n_items);
  if (report.n_items == 0) return report;

  const Matrix cand_z = standardize_rows(candidates);
  std::size_t hits = 0, hits_at_k = 0;
  for (Eigen::Index start = 0; start < predictions.rows(); start += kBlockRows) {
    Eigen::Index len = std::min(kBlockRows, predictions.rows() - start);
    Matrix corr = standardize_rows(predictions.middleRows(start, len)) * cand_z.transpose();
    corr = corr.cwiseMax(-1.0).cwiseMin(1.0);
    for (Eigen::Index r = 0; r < len; ++r) {
      auto item = static_cast<std::size_t>(start + r);
      auto own = static_cast<Eigen::Index>(target_index[item]);
      double own_corr = corr(r, own);
      std::size_t greater = 0, ties = 0;
      for (Eigen::Index c = 0; c < corr.cols(); ++c) {
        if (c == own) continue;
        if (corr(r, c) > own_corr) {
          ++greater;
        } else if (corr(r, c) == own_corr) {
          ++ties;
        }
      }
      ItemResult& res = report.per_item[item];
      res.target_correlation = own_corr;
      res.rank = greater + 1;
      res.correct = greater == 0 && ties == 0;
      hits += res.correct;
      hits_at_k += res.rank <= k;
    }
  }
  report.accuracy = static_cast<double>(hits) / static_cast<double>(report.n_items);
  report.accuracy_at_k = static_cast<double>(hits_at_k) / static_cast<double>(report.n_items);
  return report;
}

EvalReport correlation_accuracy(const Matrix& predictions, const Matrix& targets, std::size_t k) {
  if (predictions.rows() != targets.rows()) {
    throw ShapeError("correlation_accuracy: " + std::to_string(predictions.rows()) +
                     " predictions for " + std::to_string(targets.rows()) + " targets");
  }
  std::vector<std::size_t> own(static_cast<std::size_t>(targets.rows()));
  std::iota(own.begin(), own.end(), 0);
  return correlation_accuracy(predictions, targets, own, k);
}

double token_weighted_accuracy(const EvalReport& report, std::span<const double> frequencies) {
  if (frequencies.size() != report.per_item.size()) {
    throw ShapeError("token_weighted_accuracy: " + std::to_string(frequencies.size()) +
                     " frequencies for " + std::to_string(report.per_item.size()) + " items");
  }
  double total = 0, hit = 0;
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    if (!(frequencies[i] >= 0)) throw InputError("token_weighted_accuracy: negative frequency");
    total += frequencies[i];
    if (report.per_item[i].correct) hit += frequencies[i];
  }
  if (total == 0) throw InputError("token_weighted_accuracy: frequencies sum to zero");
  return hit / total;
}

std::vector<double> target_correlation_diff(const EvalReport& a, const EvalReport& b) {
  if (a.per_item.size() != b.per_item.size()) {
    throw ShapeError("target_correlation_diff: reports cover " +
                     std::to_string(a.per_item.size()) + " and " +
                     std::to_string(b.per_item.size()) + " items");
  }
  std::vector<double> out(a.per_item.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.per_item[i].target_correlation - b.per_item[i].target_correlation;
  }
  return out;
}

std::vector<std::vector<Neighbour>> nearest_neighbours(const Matrix& predictions,
                                                       const Matrix& candidates, std::size_t k) {
  Matrix corr = row_correlations(predictions, candidates);
  k = std::min<std::size_t>(k, static_cast<std::size_t>(candidates.rows()));
  std::vector<std::vector<Neighbour>> out(static_cast<std::size_t>(predictions.rows()));
  std::vector<std::size_t> order(static_cast<std::size_t>(candidates.rows()));
  for (Eigen::Index r = 0; r < corr.rows(); ++r) {
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        double ca = corr(r, static_cast<Eigen::Index>(a));
                        double cb = corr(r, static_cast<Eigen::Index>(b));
                        return ca != cb ? ca > cb : a < b;
                      });
    auto& row = out[static_cast<std::size_t>(r)];
    for (std::size_t j = 0; j < k; ++j) {
      row.push_back({order[j], corr(r, static_cast<Eigen::Index>(order[j]))});
    }
  }
  return out;
}

std::string format_report(const EvalReport& report, std::span<const std::string> forms) {
  if (forms.size() != report.per_item.size()) {
    throw ShapeError("format_report: " + std::to_string(forms.size()) + " forms for " +
                     std::to_string(report.per_item.size()) + " items");
  }
  std::ostringstream out;
  out << "form\ttarget_correlation\trank\tcorrect\n";
  for (std::size_t i = 0; i < forms.size(); ++i) {
    const auto& item = report.per_item[i];
    out << forms[i] << '\t' << io::format_double(item.target_correlation) << '\t' << item.rank
        << '\t' << (item.correct ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace dlm
