#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dlm/linalg.hpp"

namespace dlm {

/// How a lexicon's forms are cut into units.
enum class UnitMode {
  letters,   ///< one unit per character; cues render without a joiner ("#by")
  segments,  ///< dot-separated units such as phones; cues joined by U+00B7
};

inline constexpr std::string_view kSegmentJoiner = "\xC2\xB7";

inline std::string_view joiner_for(UnitMode mode) {
  return mode == UnitMode::letters ? std::string_view{} : kSegmentJoiner;
}

struct LexiconEntry {
  std::string form;
  std::vector<std::string> units;
  std::uint64_t frequency = 0;
  std::size_t sem_index = 0;
};

class Lexicon {
 public:
  Lexicon() = default;
  /// Throws InputError on duplicate forms or empty unit lists.
  Lexicon(std::vector<LexiconEntry> entries, UnitMode mode);

  const std::vector<LexiconEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const LexiconEntry& operator[](std::size_t i) const { return entries_[i]; }
  UnitMode mode() const { return mode_; }
  std::optional<std::size_t> find(std::string_view form) const;
  std::vector<double> frequencies() const;

 private:
  std::vector<LexiconEntry> entries_;
  UnitMode mode_ = UnitMode::letters;
  std::unordered_map<std::string, std::size_t> by_form_;
};

/// Units of a raw form: per code point in letter mode, dot-split otherwise.
std::vector<std::string> segment_form(std::string_view text, UnitMode mode);

/// Tab-separated `form<TAB>frequency[<TAB>segmentation]` with a header row.
/// The presence of the segmentation column selects UnitMode::segments.
Lexicon load_lexicon(const std::string& path);
void save_lexicon(const std::string& path, const Lexicon& lexicon);

/// All consecutive n-grams of the units padded with one boundary symbol at
/// each end, in order and with duplicates kept.
std::vector<std::string> extract_cues(std::span<const std::string> units, std::size_t n,
                                      std::string_view boundary = "#",
                                      std::string_view joiner = {});

class CueInventory {
 public:
  CueInventory() = default;
  CueInventory(std::size_t n, std::string boundary, std::string joiner,
               std::vector<std::string> cues);

  /// Cues in first-occurrence order over the lexicon.
  static CueInventory build(const Lexicon& lexicon, std::size_t n = 3,
                            std::string boundary = "#");

  std::size_t n() const { return n_; }
  const std::string& boundary() const { return boundary_; }
  const std::string& joiner() const { return joiner_; }
  const std::vector<std::string>& cues() const { return cues_; }
  std::size_t size() const { return cues_.size(); }
  std::optional<std::size_t> find(const std::string& cue) const;

  std::vector<std::string> cues_of(std::span<const std::string> units) const {
    return extract_cues(units, n_, boundary_, joiner_);
  }

 private:
  std::size_t n_ = 3;
  std::string boundary_ = "#";
  std::string joiner_;
  std::vector<std::string> cues_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Inventory text format: `n<TAB>..`, `boundary<TAB>..`, `joiner<TAB>..`,
/// then one cue per line after a `cues` marker line.
void save_inventory(const std::string& path, const CueInventory& inventory);
CueInventory load_inventory(const std::string& path);

enum class UnknownCues {
  raise,  ///< build mode
  skip,   ///< inference mode
};

struct FormVector {
  RowVector row;
  std::size_t unknown_cues = 0;
};

FormVector form_vector(std::span<const std::string> units, const CueInventory& inventory,
                       UnknownCues policy = UnknownCues::skip);

/// Binary cue-presence matrix, one row per entry.
Matrix build_form_matrix(std::span<const LexiconEntry> entries, const CueInventory& inventory,
                         UnknownCues policy = UnknownCues::raise);

struct Embeddings {
  Matrix values;  ///< rows aligned with the lexicon entries
  std::vector<std::string> warnings;
};

/// Text embeddings: optional `<count> <dim>` header, then `word v1 .. vd`.
/// Duplicated words keep their last occurrence (with a warning).
Embeddings load_embeddings(const std::string& path, const Lexicon& lexicon);
void save_embeddings(const std::string& path, std::span<const std::string> words,
                     const Matrix& values);

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Seeded random split followed by a repair pass that moves any validation or
/// test item with a cue unseen in training into training.
DatasetSplit split_dataset(const Matrix& form_matrix,
                           std::array<double, 3> fractions = {0.8, 0.1, 0.1},
                           std::uint64_t seed = 0);

/// True iff every cue active in validation/test rows is active in a train row.
bool split_covers_cues(const Matrix& form_matrix, const DatasetSplit& split);

/// Most frequent `fraction` of entries (floor) versus the rest. Ties at the
/// cut go to the lexicographically smaller form.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> frequency_rank_split(
    std::span<const LexiconEntry> entries, double fraction = 0.9);

}  // namespace dlm
