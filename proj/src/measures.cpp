#include "dlm/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "dlm/io.hpp"

namespace dlm {

std::vector<WordMeasures> compute_measures(std::span<const LexiconEntry> entries,
                                           const Matrix& form_matrix, const Matrix& semantics) {
  const auto n = static_cast<Eigen::Index>(entries.size());
  if (form_matrix.rows() != n || semantics.rows() != n) {
    throw ShapeError("compute_measures: " + std::to_string(n) + " entries, form matrix " +
                     shape_string(form_matrix.rows(), form_matrix.cols()) + ", semantics " +
                     shape_string(semantics.rows(), semantics.cols()));
  }
  std::vector<WordMeasures> out(entries.size());
  if (n == 0) return out;

  RowVector doc_freq = form_matrix.colwise().sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& m = out[static_cast<std::size_t>(i)];
    const auto& e = entries[static_cast<std::size_t>(i)];
    m.length = e.units.size();
    m.log_frequency = std::log1p(static_cast<double>(e.frequency));
    double active = form_matrix.row(i).sum();
    if (active > 0) {
      double others = form_matrix.row(i).dot(doc_freq) - form_matrix.row(i).squaredNorm();
      m.cue_overlap = others / active;
    }
  }

  // Coltheart's N: substitution neighbours within each length bucket.
  std::map<std::size_t, std::vector<std::size_t>> by_length;
  for (std::size_t i = 0; i < entries.size(); ++i) by_length[entries[i].units.size()].push_back(i);
  for (const auto& [len, members] : by_length) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const auto& ua = entries[members[a]].units;
        const auto& ub = entries[members[b]].units;
        std::size_t diff = 0;
        for (std::size_t k = 0; k < len && diff < 2; ++k) diff += ua[k] != ub[k];
        if (diff == 1) {
          ++out[members[a]].coltheart_n;
          ++out[members[b]].coltheart_n;
        }
      }
    }
  }

  if (n == 1) {
    out[0].semantic_density = 0;
    out[0].semantic_density_defined = false;
    return out;
  }
  Matrix z = standardize_rows(semantics);
  for (Eigen::Index i = 0; i < n; ++i) {
    RowVector corr = (z * z.row(i).transpose()).transpose();
    corr(i) = -std::numeric_limits<double>::infinity();
    out[static_cast<std::size_t>(i)].semantic_density = std::clamp(corr.maxCoeff(), -1.0, 1.0);
  }
  return out;
}

std::string format_measures(std::span<const LexiconEntry> entries,
                            std::span<const WordMeasures> measures) {
  if (entries.size() != measures.size()) {
    throw ShapeError("format_measures: entry and measure counts differ");
  }
  std::ostringstream out;
  out << "form\tlength\tlog_frequency\tcue_overlap\tcoltheart_n\tsemantic_density\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& m = measures[i];
    out << entries[i].form << '\t' << m.length << '\t' << io::format_double(m.log_frequency)
        << '\t' << io::format_double(m.cue_overlap) << '\t' << m.coltheart_n << '\t'
        << (m.semantic_density_defined ? io::format_double(m.semantic_density) : "NA") << '\n';
  }
  return out.str();
}

}  // namespace dlm
