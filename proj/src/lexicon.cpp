#include "dlm/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dlm/io.hpp"
#include "dlm/random.hpp"

namespace dlm {

Lexicon::Lexicon(std::vector<LexiconEntry> entries, UnitMode mode)
    : entries_(std::move(entries)), mode_(mode) {
  by_form_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].units.empty()) {
      throw InputError("lexicon: entry '" + entries_[i].form + "' has no units");
    }
    if (!by_form_.emplace(entries_[i].form, i).second) {
      throw InputError("lexicon: duplicate form '" + entries_[i].form + "'");
    }
  }
}

std::optional<std::size_t> Lexicon::find(std::string_view form) const {
  auto it = by_form_.find(std::string(form));
  if (it == by_form_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> Lexicon::frequencies() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(static_cast<double>(e.frequency));
  return out;
}

std::vector<std::string> segment_form(std::string_view text, UnitMode mode) {
  if (mode == UnitMode::letters) return io::utf8_codepoints(text);
  std::vector<std::string> units;
  for (auto& u : io::split(text, '.')) {
    if (!u.empty()) units.push_back(std::move(u));
  }
  return units;
}

Lexicon load_lexicon(const std::string& path) {
  auto lines = io::read_lines(path);
  if (lines.empty()) throw ParseError(path + ": empty lexicon file");
  auto header = io::split(lines[0], '\t');
  bool segmented = header.size() == 3 && header[2] == "segmentation";
  if (header.size() < 2 || header[0] != "form" || header[1] != "frequency" ||
      (header.size() == 3 && !segmented) || header.size() > 3) {
    throw ParseError(path + ":1: expected header form<TAB>frequency[<TAB>segmentation]");
  }
  UnitMode mode = segmented ? UnitMode::segments : UnitMode::letters;

  std::vector<LexiconEntry> entries;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    std::string where = path + ":" + std::to_string(ln + 1);
    auto fields = io::split(lines[ln], '\t');
    if (fields.size() != header.size()) {
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    LexiconEntry e;
    e.form = fields[0];
    if (e.form.empty()) throw ParseError(where + ": empty form");
    long long freq = io::parse_integer(fields[1], where);
    if (freq < 0) throw ParseError(where + ": negative frequency");
    e.frequency = static_cast<std::uint64_t>(freq);
    if (segmented && !fields[2].empty()) {
      e.units = segment_form(fields[2], UnitMode::segments);
    } else {
      e.units = io::utf8_codepoints(e.form);
    }
    if (e.units.empty()) throw ParseError(where + ": no units in segmentation");
    e.sem_index = entries.size();
    entries.push_back(std::move(e));
  }
  return Lexicon(std::move(entries), mode);
}

void save_lexicon(const std::string& path, const Lexicon& lexicon) {
  std::ostringstream out;
  bool segmented = lexicon.mode() == UnitMode::segments;
  out << "form\tfrequency" << (segmented ? "\tsegmentation" : "") << '\n';
  for (const auto& e : lexicon.entries()) {
    out << e.form << '\t' << e.frequency;
    if (segmented) {
      out << '\t';
      for (std::size_t i = 0; i < e.units.size(); ++i) out << (i ? "." : "") << e.units[i];
    }
    out << '\n';
  }
  io::write_text(path, out.str());
}

std::vector<std::string> extract_cues(std::span<const std::string> units, std::size_t n,
                                      std::string_view boundary, std::string_view joiner) {
  if (units.empty()) throw InputError("extract_cues: empty unit list");
  if (n == 0) throw InputError("extract_cues: n-gram order must be at least 1");

  std::vector<std::string_view> padded;
  padded.reserve(units.size() + 2);
  padded.push_back(boundary);
  for (const auto& u : units) padded.emplace_back(u);
  padded.push_back(boundary);

  auto join = [&](std::size_t from, std::size_t count) {
    std::string cue;
    for (std::size_t k = 0; k < count; ++k) {
      if (k) cue += joiner;
      cue += padded[from + k];
    }
    return cue;
  };

  // A padded form shorter than n still yields one cue, so no row is all zero.
  if (padded.size() < n) return {join(0, padded.size())};

  std::vector<std::string> cues;
  cues.reserve(padded.size() - n + 1);
  for (std::size_t i = 0; i + n <= padded.size(); ++i) cues.push_back(join(i, n));
  return cues;
}

CueInventory::CueInventory(std::size_t n, std::string boundary, std::string joiner,
                           std::vector<std::string> cues)
    : n_(n), boundary_(std::move(boundary)), joiner_(std::move(joiner)), cues_(std::move(cues)) {
  index_.reserve(cues_.size());
  for (std::size_t i = 0; i < cues_.size(); ++i) {
    if (!index_.emplace(cues_[i], i).second) {
      throw InputError("cue inventory: duplicate cue '" + cues_[i] + "'");
    }
  }
}

CueInventory CueInventory::build(const Lexicon& lexicon, std::size_t n, std::string boundary) {
  std::string joiner(joiner_for(lexicon.mode()));
  std::vector<std::string> cues;
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& e : lexicon.entries()) {
    for (auto& cue : extract_cues(e.units, n, boundary, joiner)) {
      if (seen.emplace(cue, cues.size()).second) cues.push_back(std::move(cue));
    }
  }
  return CueInventory(n, std::move(boundary), std::move(joiner), std::move(cues));
}

std::optional<std::size_t> CueInventory::find(const std::string& cue) const {
  auto it = index_.find(cue);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void save_inventory(const std::string& path, const CueInventory& inventory) {
  std::ostringstream out;
  out << "n\t" << inventory.n() << '\n'
      << "boundary\t" << inventory.boundary() << '\n'
      << "joiner\t" << inventory.joiner() << '\n'
      << "cues\t" << inventory.size() << '\n';
  for (const auto& c : inventory.cues()) out << c << '\n';
  io::write_text(path, out.str());
}

CueInventory load_inventory(const std::string& path) {
  auto lines = io::read_lines(path);
  if (lines.size() < 4) throw ParseError(path + ": truncated cue inventory");
  auto field = [&](std::size_t ln, const std::string& key) {
    auto kv = io::split(lines[ln], '\t');
    if (kv.size() != 2 || kv[0] != key) {
      throw ParseError(path + ":" + std::to_string(ln + 1) + ": expected '" + key + "'");
    }
    return kv[1];
  };
  auto n = io::parse_integer(field(0, "n"), path + ":1");
  auto boundary = field(1, "boundary");
  auto joiner = field(2, "joiner");
  auto count = io::parse_integer(field(3, "cues"), path + ":4");
  if (n < 1 || count < 0 || lines.size() != static_cast<std::size_t>(count) + 4) {
    throw ParseError(path + ": inconsistent cue inventory header");
  }
  return CueInventory(static_cast<std::size_t>(n), boundary, joiner,
                      std::vector<std::string>(lines.begin() + 4, lines.end()));
}

FormVector form_vector(std::span<const std::string> units, const CueInventory& inventory,
                       UnknownCues policy) {
  FormVector out{RowVector::Zero(static_cast<Eigen::Index>(inventory.size())), 0};
  for (const auto& cue : inventory.cues_of(units)) {
    if (auto col = inventory.find(cue)) {
      out.row(static_cast<Eigen::Index>(*col)) = 1.0;
    } else if (policy == UnknownCues::raise) {
      throw InputError("form matrix: cue '" + cue + "' is not in the inventory");
    } else {
      ++out.unknown_cues;
    }
  }
  return out;
}

Matrix build_form_matrix(std::span<const LexiconEntry> entries, const CueInventory& inventory,
                         UnknownCues policy) {
  Matrix c = Matrix::Zero(static_cast<Eigen::Index>(entries.size()),
                          static_cast<Eigen::Index>(inventory.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    c.row(static_cast<Eigen::Index>(i)) = form_vector(entries[i].units, inventory, policy).row;
  }
  return c;
}

Embeddings load_embeddings(const std::string& path, const Lexicon& lexicon) {
  auto lines = io::read_lines(path);
  Embeddings out;
  std::optional<std::size_t> dim;
  std::size_t first = 0;

  if (!lines.empty()) {
    auto head = io::split_whitespace(lines[0]);
    auto is_int = [](const std::string& s) {
      return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
    };
    if (head.size() == 2 && is_int(head[0]) && is_int(head[1])) {
      dim = static_cast<std::size_t>(io::parse_integer(head[1], path + ":1"));
      first = 1;
    }
  }

  std::unordered_map<std::string, std::pair<std::vector<double>, std::size_t>> rows;
  for (std::size_t ln = first; ln < lines.size(); ++ln) {
    auto tokens = io::split_whitespace(lines[ln]);
    if (tokens.empty()) continue;
    std::string where = path + ":" + std::to_string(ln + 1);
    if (!dim) dim = tokens.size() - 1;
    if (tokens.size() != *dim + 1) {
      throw ParseError(where + ": expected " + std::to_string(*dim) + " values, got " +
                       std::to_string(tokens.size() - 1));
    }
    if (!lexicon.find(tokens[0])) continue;
    std::vector<double> v;
    v.reserve(*dim);
    for (std::size_t k = 1; k < tokens.size(); ++k) v.push_back(io::parse_double(tokens[k], where));
    auto [it, inserted] = rows.try_emplace(tokens[0], std::move(v), ln + 1);
    if (!inserted) {
      out.warnings.push_back(where + ": duplicate word '" + tokens[0] + "' (line " +
                             std::to_string(it->second.second) + " overridden)");
      it->second = {std::move(v), ln + 1};
    }
  }
  if (!dim || *dim == 0) throw ParseError(path + ": no embedding dimension");

  std::vector<std::string> missing;
  for (const auto& e : lexicon.entries()) {
    if (!rows.count(e.form)) missing.push_back(e.form);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw InputError(path + ": no embedding for " + std::to_string(missing.size()) +
                     " word(s): " + list);
  }

  out.values.resize(static_cast<Eigen::Index>(lexicon.size()), static_cast<Eigen::Index>(*dim));
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    const auto& v = rows.at(lexicon[i].form).first;
    for (std::size_t k = 0; k < v.size(); ++k) {
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v[k];
    }
  }
  return out;
}

void save_embeddings(const std::string& path, std::span<const std::string> words,
                     const Matrix& values) {
  if (static_cast<Eigen::Index>(words.size()) != values.rows()) {
    throw ShapeError("save_embeddings: " + std::to_string(words.size()) + " words for " +
                     std::to_string(values.rows()) + " rows");
  }
  std::ostringstream out;
  out << values.rows() << ' ' << values.cols() << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    out << words[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < values.cols(); ++k) out << ' ' << io::format_double(values(i, k));
    out << '\n';
  }
  io::write_text(path, out.str());
}

namespace {

std::vector<long> train_cue_counts(const Matrix& c, const std::vector<std::size_t>& train) {
  std::vector<long> counts(static_cast<std::size_t>(c.cols()), 0);
  for (auto i : train) {
    for (Eigen::Index k = 0; k < c.cols(); ++k) {
      if (c(static_cast<Eigen::Index>(i), k) != 0) ++counts[static_cast<std::size_t>(k)];
    }
  }
  return counts;
}

bool covered(const Matrix& c, std::size_t row, const std::vector<long>& counts) {
  for (Eigen::Index k = 0; k < c.cols(); ++k) {
    if (c(static_cast<Eigen::Index>(row), k) != 0 && counts[static_cast<std::size_t>(k)] == 0) {
      return false;
    }
  }
  return true;
}

}  // namespace

DatasetSplit split_dataset(const Matrix& form_matrix, std::array<double, 3> fractions,
                           std::uint64_t seed) {
  double total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9 || std::any_of(fractions.begin(), fractions.end(),
                                                  [](double f) { return !(f >= 0); })) {
    throw InputError("split_dataset: fractions must be non-negative and sum to 1");
  }
  const auto n = static_cast<std::size_t>(form_matrix.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(order, rng);

  auto n_train = static_cast<std::size_t>(std::floor(fractions[0] * static_cast<double>(n) + 1e-9));
  auto n_val = static_cast<std::size_t>(std::floor(fractions[1] * static_cast<double>(n) + 1e-9));
  n_val = std::min(n_val, n - n_train);

  DatasetSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
  std::vector<std::size_t> val(order.begin() + static_cast<long>(n_train),
                               order.begin() + static_cast<long>(n_train + n_val));
  std::vector<std::size_t> test(order.begin() + static_cast<long>(n_train + n_val), order.end());

  // Moving an item into training only adds coverage, so one pass suffices.
  auto counts = train_cue_counts(form_matrix, split.train);
  auto repair = [&](std::vector<std::size_t>& held, std::vector<std::size_t>& kept) {
    for (auto i : held) {
      if (covered(form_matrix, i, counts)) {
        kept.push_back(i);
        continue;
      }
      split.train.push_back(i);
      for (Eigen::Index k = 0; k < form_matrix.cols(); ++k) {
        if (form_matrix(static_cast<Eigen::Index>(i), k) != 0) ++counts[static_cast<std::size_t>(k)];
      }
    }
  };
  repair(val, split.validation);
  repair(test, split.test);
  // Items kept earlier stay covered: coverage counts never decrease.
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

bool split_covers_cues(const Matrix& form_matrix, const DatasetSplit& split) {
  auto counts = train_cue_counts(form_matrix, split.train);
  for (const auto* held : {&split.validation, &split.test}) {
    for (auto i : *held) {
      if (!covered(form_matrix, i, counts)) return false;
    }
  }
  return true;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> frequency_rank_split(
    std::span<const LexiconEntry> entries, double fraction) {
  if (!(fraction > 0 && fraction < 1)) {
    throw InputError("frequency_rank_split: fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (entries[a].frequency != entries[b].frequency) {
      return entries[a].frequency > entries[b].frequency;
    }
    return entries[a].form < entries[b].form;
  });
  auto n_train = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(entries.size()) + 1e-9));
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<long>(n_train));
  std::vector<std::size_t> holdout(order.begin() + static_cast<long>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(holdout.begin(), holdout.end());
  return {std::move(train), std::move(holdout)};
}

}  // namespace dlm
