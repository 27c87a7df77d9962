#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dlm/linalg.hpp"

namespace dlm {

struct ItemResult {
  double target_correlation = 0;
  std::size_t rank = 1;  ///< 1 + candidates strictly more correlated than the target
  bool correct = false;  ///< own target is the strict maximum
};

struct EvalReport {
  std::size_t n_items = 0;
  std::size_t k = 10;
  double accuracy = 0;
  double accuracy_at_k = 0;
  std::optional<double> token_weighted_accuracy;
  std::vector<ItemResult> per_item;
};

/// Scores each prediction row against every candidate row. Item i's own
/// target is candidates.row(target_index[i]); exact ties count as incorrect.
EvalReport correlation_accuracy(const Matrix& predictions, const Matrix& candidates,
                                std::span<const std::size_t> target_index, std::size_t k = 10);

/// Candidate set = the targets themselves, item i owning row i.
EvalReport correlation_accuracy(const Matrix& predictions, const Matrix& targets,
                                std::size_t k = 10);

/// sum_i f_i * correct_i / sum_i f_i.
double token_weighted_accuracy(const EvalReport& report, std::span<const double> frequencies);

/// Per item: a.target_correlation - b.target_correlation.
std::vector<double> target_correlation_diff(const EvalReport& a, const EvalReport& b);

struct Neighbour {
  std::size_t index = 0;
  double correlation = 0;
};

/// The k candidates most correlated with each prediction, best first; ties
/// resolve to the lower candidate index.
std::vector<std::vector<Neighbour>> nearest_neighbours(const Matrix& predictions,
                                                       const Matrix& candidates, std::size_t k);

/// Tab-separated per-item table: form, target_correlation, rank, correct.
std::string format_report(const EvalReport& report, std::span<const std::string> forms);

}  // namespace dlm
