#pragma once

#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dlm/deep_map.hpp"
#include "dlm/lexicon.hpp"
#include "dlm/linear_map.hpp"
#include "dlm/stats.hpp"

namespace dlm {

/// A comprehension model of either kind.
using Model = std::variant<LinearMapping, DeepNetwork>;

enum class Regime { el, fil, ddl, eddl, fiddl };

std::string to_string(Regime r);
Regime parse_regime(const std::string& text);

struct RegimeOptions {
  double relative_ridge = kDefaultRelativeRidge;
  std::vector<Eigen::Index> hidden = {500};
  TrainConfig train;
  /// Share of most frequent words the ddl regime trains on; the rest is
  /// its early-stopping validation set.
  double ddl_fraction = 0.9;
};

/// Fits one of the five training regimes on the full lexicon.
///   el    unweighted least squares
///   fil   frequency-weighted least squares
///   ddl   network on the most frequent words, early stopping on the rest
///   eddl  network on all words for train.fixed_epochs epochs
///   fiddl network on the token distribution
/// For production the roles of form and semantics swap.
Model fit_regime(Regime regime, const Matrix& form_matrix, const Matrix& semantics,
                 std::span<const LexiconEntry> entries, const RegimeOptions& options,
                 Direction direction = Direction::comprehension,
                 TrainHistory* history = nullptr);

Matrix predict(const Model& model, const Matrix& input);
RowVector predict(const Model& model, const RowVector& input);
Direction direction_of(const Model& model);

void save_model(const std::string& path, const Model& model);
/// Dispatches on the container magic.
Model load_model(const std::string& path);

struct Trial {
  std::string participant;
  long order = 0;
  std::string form;
  bool is_word = true;
  double rt_ms = 0;
};

struct RtInv {
  double value = 0;  ///< -1000 / rt_ms
};

RtInv rt_inverse(double rt_ms);

/// Tab-separated `participant<TAB>order<TAB>form<TAB>is_word<TAB>rt_ms`.
std::vector<Trial> load_trials(const std::string& path);

enum class SimMode { static_mode, dynamic_mode };
enum class Engine { linear, deep };

std::string to_string(SimMode m);
std::string to_string(Engine e);

struct TrialRecord {
  Trial trial;
  double rt_inv = 0;
  /// Target correlation for words, nearest-neighbour correlation for nonwords.
  double measure = 0;
  std::size_t unknown_cues = 0;
};

struct SimulationTrace {
  std::string participant;
  SimMode mode = SimMode::static_mode;
  Engine engine = Engine::linear;
  std::vector<TrialRecord> records;
};

/// Everything a simulation looks up: entries, cue inventory, semantics.
struct SimulationLexicon {
  const Lexicon& lexicon;
  const CueInventory& inventory;
  const Matrix& semantics;
};

/// Replays one participant's trials without learning.
SimulationTrace run_static(std::span<const Trial> trials, const Model& model,
                           const SimulationLexicon& lex);

/// Replays one participant's trials, learning after each word trial (and
/// nonword trials, toward the zero vector, when `update_nonwords`). Each
/// record is computed before that trial's update.
SimulationTrace run_dynamic(std::span<const Trial> trials, Model model,
                            const SimulationLexicon& lex, double rate,
                            bool update_nonwords = false);

struct SimulationConfig {
  SimMode mode = SimMode::static_mode;
  double rate = kDefaultWidrowHoffRate;
  bool update_nonwords = false;
  std::size_t threads = 1;
};

/// Splits trials by participant (first-appearance order) and simulates each
/// on its own copy of the model.
std::vector<SimulationTrace> simulate_participants(std::span<const Trial> trials,
                                                   const Model& model,
                                                   const SimulationLexicon& lex,
                                                   const SimulationConfig& cfg);

/// Trace table columns: participant, order, form, is_word, rt_ms, rt_inv,
/// measure, unknown_cues, mode, engine.
std::string format_traces(std::span<const SimulationTrace> traces);
std::vector<SimulationTrace> load_traces(const std::string& path);

struct AicComparison {
  std::string participant;  ///< "pooled" for the all-trials fit
  std::size_t n = 0;
  double aic_a = 0;
  double aic_b = 0;
  double diff = 0;  ///< aic_a - aic_b
};

/// Fits rt_inv ~ measure + is_word per participant (and pooled) for both
/// traces and compares their AIC.
std::vector<AicComparison> compare_traces(std::span<const SimulationTrace> a,
                                          std::span<const SimulationTrace> b);
std::string format_comparison(std::span<const AicComparison> rows);

struct RegimeModel {
  std::string name;
  Model model;
};

struct AvgRtRow {
  std::string form;
  std::vector<double> target_correlation;  ///< one per model
  double rt_inv = 0;
};

/// Per word with an average RT: target correlation under each model plus RTinv.
std::vector<AvgRtRow> extract_avg_rt_table(const SimulationLexicon& lex,
                                           std::span<const RegimeModel> models,
                                           const std::map<std::string, double>& rts);
std::string format_avg_rt_table(std::span<const RegimeModel> models,
                                std::span<const AvgRtRow> rows);

}  // namespace dlm
