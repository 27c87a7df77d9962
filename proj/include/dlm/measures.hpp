#pragma once

#include <span>
#include <string>
#include <vector>

#include "dlm/lexicon.hpp"

namespace dlm {

struct WordMeasures {
  /// Mean over the word's cues of the number of *other* words carrying that cue.
  double cue_overlap = 0;
  /// Same-length words differing from this one in exactly one unit.
  std::size_t coltheart_n = 0;
  /// Highest Pearson correlation with any other word's semantic vector.
  double semantic_density = 0;
  bool semantic_density_defined = true;
  std::size_t length = 0;
  double log_frequency = 0;  ///< ln(1 + frequency)
};

/// Per-entry similarity measures; `form_matrix` and `semantics` rows align
/// with `entries`.
std::vector<WordMeasures> compute_measures(std::span<const LexiconEntry> entries,
                                           const Matrix& form_matrix, const Matrix& semantics);

/// Tab-separated table with header
/// form, length, log_frequency, cue_overlap, coltheart_n, semantic_density.
std::string format_measures(std::span<const LexiconEntry> entries,
                            std::span<const WordMeasures> measures);

}  // namespace dlm
