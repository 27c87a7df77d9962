#include "dlm/simulate.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "dlm/io.hpp"

namespace dlm {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::el:
      return "el";
    case Regime::fil:
      return "fil";
    case Regime::ddl:
      return "ddl";
    case Regime::eddl:
      return "eddl";
    case Regime::fiddl:
      return "fiddl";
  }
  return "unknown";
}

Regime parse_regime(const std::string& text) {
  for (auto r : {Regime::el, Regime::fil, Regime::ddl, Regime::eddl, Regime::fiddl}) {
    if (to_string(r) == text) return r;
  }
  throw InputError("unknown regime '" + text + "' (expected el, fil, ddl, eddl or fiddl)");
}

Model fit_regime(Regime regime, const Matrix& form_matrix, const Matrix& semantics,
                 std::span<const LexiconEntry> entries, const RegimeOptions& options,
                 Direction direction, TrainHistory* history) {
  if (form_matrix.rows() != semantics.rows() ||
      form_matrix.rows() != static_cast<Eigen::Index>(entries.size())) {
    throw ShapeError("fit_regime: form matrix, semantics and lexicon disagree in size");
  }
  const bool comp = direction == Direction::comprehension;
  const Matrix& input = comp ? form_matrix : semantics;
  const Matrix& target = comp ? semantics : form_matrix;
  std::vector<double> freqs;
  freqs.reserve(entries.size());
  for (const auto& e : entries) freqs.push_back(static_cast<double>(e.frequency));

  switch (regime) {
    case Regime::el:
      return estimate_endstate(input, target, options.relative_ridge, direction);
    case Regime::fil:
      return estimate_frequency_informed(input, target, freqs, options.relative_ridge, direction);
    default:
      break;
  }

  auto net = make_mlp(input.cols(), options.hidden, target.cols(), direction, options.train.seed);
  TrainHistory local;
  TrainConfig cfg = options.train;
  if (regime == Regime::ddl) {
    auto [train_idx, holdout] = frequency_rank_split(entries, options.ddl_fraction);
    if (train_idx.empty() || holdout.empty()) {
      throw InputError("fit_regime: ddl needs words on both sides of the frequency cut");
    }
    std::vector<Eigen::Index> tr(train_idx.begin(), train_idx.end());
    std::vector<Eigen::Index> va(holdout.begin(), holdout.end());
    cfg.epoch_cap = EpochCap::early_stop;
    local = train(net, input(tr, Eigen::all), target(tr, Eigen::all), input(va, Eigen::all),
                  target(va, Eigen::all), cfg);
  } else if (regime == Regime::eddl) {
    cfg.epoch_cap = EpochCap::fixed;
    Matrix none_x(0, input.cols()), none_y(0, target.cols());
    local = train(net, input, target, none_x, none_y, cfg);
  } else {
    local = train_token_distribution(net, input, target, freqs, cfg);
  }
  if (history) *history = std::move(local);
  return net;
}

Matrix predict(const Model& model, const Matrix& input) {
  return std::visit(
      [&](const auto& m) -> Matrix {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearMapping>) {
          return predict(m, input);
        } else {
          return forward(m, input);
        }
      },
      model);
}

RowVector predict(const Model& model, const RowVector& input) {
  Matrix row = input;
  return predict(model, row).row(0);
}

Direction direction_of(const Model& model) {
  return std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearMapping>) {
          return m.direction;
        } else {
          return m.task;
        }
      },
      model);
}

void save_model(const std::string& path, const Model& model) {
  if (const auto* map = std::get_if<LinearMapping>(&model)) {
    save_mapping(path, *map);
  } else {
    save_network(path, std::get<DeepNetwork>(model));
  }
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  char tag[4] = {};
  in.read(tag, 4);
  std::string magic(tag, 4);
  if (magic == "DLML") return load_mapping(path);
  if (magic == "DLMN") return load_network(path);
  throw ParseError(path + ": not a mapping or network file");
}

RtInv rt_inverse(double rt_ms) {
  if (!(rt_ms > 0) || !std::isfinite(rt_ms)) {
    throw InputError("rt_inverse: reaction time must be positive, got " + io::format_double(rt_ms));
  }
  return {-1000.0 / rt_ms};
}

std::vector<Trial> load_trials(const std::string& path) {
  auto lines = io::read_lines(path);
  const std::string header = "participant\torder\tform\tis_word\trt_ms";
  if (lines.empty() || lines[0] != header) {
    throw ParseError(path + ":1: expected header " + header);
  }
  std::vector<Trial> trials;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    std::string where = path + ":" + std::to_string(ln + 1);
    auto f = io::split(lines[ln], '\t');
    if (f.size() != 5) throw ParseError(where + ": expected 5 fields");
    Trial t;
    t.participant = f[0];
    t.order = static_cast<long>(io::parse_integer(f[1], where));
    t.form = f[2];
    if (f[3] != "0" && f[3] != "1") throw ParseError(where + ": is_word must be 0 or 1");
    t.is_word = f[3] == "1";
    t.rt_ms = io::parse_double(f[4], where);
    if (!(t.rt_ms > 0)) throw ParseError(where + ": rt_ms must be positive");
    if (t.participant.empty() || t.form.empty()) throw ParseError(where + ": empty field");
    trials.push_back(std::move(t));
  }
  return trials;
}

std::string to_string(SimMode m) { return m == SimMode::static_mode ? "static" : "dynamic"; }
std::string to_string(Engine e) { return e == Engine::linear ? "linear" : "deep"; }

namespace {

struct Stimulus {
  RowVector cues;
  std::size_t unknown = 0;
  std::optional<std::size_t> word;  // lexicon row for word trials
};

Stimulus encode(const Trial& t, const SimulationLexicon& lex) {
  Stimulus s;
  if (t.is_word) {
    auto idx = lex.lexicon.find(t.form);
    if (!idx) throw InputError("simulation: word trial '" + t.form + "' is not in the lexicon");
    s.word = lex.lexicon[*idx].sem_index;
    auto fv = form_vector(lex.lexicon[*idx].units, lex.inventory, UnknownCues::skip);
    s.cues = std::move(fv.row);
    s.unknown = fv.unknown_cues;
  } else {
    auto units = segment_form(t.form, lex.lexicon.mode());
    if (units.empty()) throw InputError("simulation: nonword '" + t.form + "' has no units");
    auto fv = form_vector(units, lex.inventory, UnknownCues::skip);
    s.cues = std::move(fv.row);
    s.unknown = fv.unknown_cues;
  }
  return s;
}

void check_trials(std::span<const Trial> trials) {
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].participant != trials.front().participant) {
      throw InputError("simulation: trials mix participants '" + trials.front().participant +
                       "' and '" + trials[i].participant + "'");
    }
    if (i > 0 && trials[i].order <= trials[i - 1].order) {
      throw InputError("simulation: trial order must increase strictly for participant '" +
                       trials[i].participant + "'");
    }
  }
}

Engine engine_of(const Model& model) {
  return std::holds_alternative<LinearMapping>(model) ? Engine::linear : Engine::deep;
}

void check_model(const Model& model, const SimulationLexicon& lex) {
  if (direction_of(model) != Direction::comprehension) {
    throw InputError("simulation: needs a comprehension model");
  }
  Eigen::Index in = 0, out = 0;
  if (const auto* map = std::get_if<LinearMapping>(&model)) {
    in = map->input_dim();
    out = map->output_dim();
  } else {
    const auto& net = std::get<DeepNetwork>(model);
    in = net.input_dim();
    out = net.output_dim();
  }
  if (in != static_cast<Eigen::Index>(lex.inventory.size()) || out != lex.semantics.cols()) {
    throw ShapeError("simulation: model " + shape_string(in, out) + " does not match " +
                     std::to_string(lex.inventory.size()) + " cues and " +
                     std::to_string(lex.semantics.cols()) + " semantic dimensions");
  }
}

TrialRecord measure(const Trial& t, const Stimulus& s, const RowVector& prediction,
                    const SimulationLexicon& lex) {
  TrialRecord rec{t, rt_inverse(t.rt_ms).value, 0.0, s.unknown};
  if (s.word) {
    rec.measure = pearson(prediction, lex.semantics.row(static_cast<Eigen::Index>(*s.word)));
  } else {
    rec.measure = row_correlations(prediction, lex.semantics).maxCoeff();
  }
  return rec;
}

SimulationTrace simulate(std::span<const Trial> trials, Model& model,
                         const SimulationLexicon& lex, double rate, bool learn,
                         bool update_nonwords) {
  check_trials(trials);
  check_model(model, lex);
  SimulationTrace trace;
  trace.participant = trials.empty() ? std::string() : trials.front().participant;
  trace.mode = learn ? SimMode::dynamic_mode : SimMode::static_mode;
  trace.engine = engine_of(model);
  trace.records.reserve(trials.size());
  for (const auto& t : trials) {
    Stimulus s = encode(t, lex);
    trace.records.push_back(measure(t, s, predict(model, s.cues), lex));
    if (!learn || (!s.word && !update_nonwords)) continue;
    RowVector target = s.word ? RowVector(lex.semantics.row(static_cast<Eigen::Index>(*s.word)))
                              : RowVector::Zero(lex.semantics.cols());
    if (auto* map = std::get_if<LinearMapping>(&model)) {
      widrow_hoff_step(*map, s.cues, target, rate);
    } else {
      online_step(std::get<DeepNetwork>(model), s.cues, target, rate);
    }
  }
  return trace;
}

}  // namespace

SimulationTrace run_static(std::span<const Trial> trials, const Model& model,
                           const SimulationLexicon& lex) {
  Model copy = model;
  return simulate(trials, copy, lex, 0.0, false, false);
}

SimulationTrace run_dynamic(std::span<const Trial> trials, Model model,
                            const SimulationLexicon& lex, double rate, bool update_nonwords) {
  if (!(rate >= 0) || !std::isfinite(rate)) {
    throw InputError("run_dynamic: rate must be finite and non-negative");
  }
  return simulate(trials, model, lex, rate, true, update_nonwords);
}

std::vector<SimulationTrace> simulate_participants(std::span<const Trial> trials,
                                                   const Model& model,
                                                   const SimulationLexicon& lex,
                                                   const SimulationConfig& cfg) {
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::vector<Trial>> groups;
  for (const auto& t : trials) {
    auto [it, inserted] = groups.try_emplace(t.participant);
    if (inserted) ids.push_back(t.participant);
    it->second.push_back(t);
  }
  std::vector<SimulationTrace> traces(ids.size());
  auto run = [&](std::size_t i) {
    const auto& group = groups.at(ids[i]);
    traces[i] = cfg.mode == SimMode::static_mode
                    ? run_static(group, model, lex)
                    : run_dynamic(group, model, lex, cfg.rate, cfg.update_nonwords);
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.threads, ids.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < ids.size(); ++i) run(i);
    return traces;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < ids.size(); i += workers) run(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return traces;
}

std::string format_traces(std::span<const SimulationTrace> traces) {
  std::ostringstream out;
  out << "participant\torder\tform\tis_word\trt_ms\trt_inv\tmeasure\tunknown_cues\tmode\tengine\n";
  for (const auto& trace : traces) {
    for (const auto& r : trace.records) {
      out << r.trial.participant << '\t' << r.trial.order << '\t' << r.trial.form << '\t'
          << (r.trial.is_word ? 1 : 0) << '\t' << io::format_double(r.trial.rt_ms) << '\t'
          << io::format_double(r.rt_inv) << '\t' << io::format_double(r.measure) << '\t'
          << r.unknown_cues << '\t' << to_string(trace.mode) << '\t' << to_string(trace.engine)
          << '\n';
    }
  }
  return out.str();
}

std::vector<SimulationTrace> load_traces(const std::string& path) {
  auto lines = io::read_lines(path);
  const std::string header =
      "participant\torder\tform\tis_word\trt_ms\trt_inv\tmeasure\tunknown_cues\tmode\tengine";
  if (lines.empty() || lines[0] != header) throw ParseError(path + ":1: not a trace table");
  std::vector<SimulationTrace> traces;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    std::string where = path + ":" + std::to_string(ln + 1);
    auto f = io::split(lines[ln], '\t');
    if (f.size() != 10) throw ParseError(where + ": expected 10 fields");
    TrialRecord r;
    r.trial.participant = f[0];
    r.trial.order = static_cast<long>(io::parse_integer(f[1], where));
    r.trial.form = f[2];
    r.trial.is_word = f[3] == "1";
    r.trial.rt_ms = io::parse_double(f[4], where);
    r.rt_inv = io::parse_double(f[5], where);
    r.measure = io::parse_double(f[6], where);
    r.unknown_cues = static_cast<std::size_t>(io::parse_integer(f[7], where));
    auto [it, inserted] = slot.try_emplace(f[0], traces.size());
    if (inserted) {
      SimulationTrace t;
      t.participant = f[0];
      t.mode = f[8] == "dynamic" ? SimMode::dynamic_mode : SimMode::static_mode;
      t.engine = f[9] == "deep" ? Engine::deep : Engine::linear;
      traces.push_back(std::move(t));
    }
    traces[it->second].records.push_back(std::move(r));
  }
  return traces;
}

namespace {

OlsFit fit_trace_records(const std::vector<const TrialRecord*>& recs) {
  Matrix x(static_cast<Eigen::Index>(recs.size()), 2);
  Vector y(static_cast<Eigen::Index>(recs.size()));
  for (std::size_t i = 0; i < recs.size(); ++i) {
    auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = recs[i]->measure;
    x(r, 1) = recs[i]->trial.is_word ? 1.0 : 0.0;
    y(r) = recs[i]->rt_inv;
  }
  return ols_fit(x, y);
}

}  // namespace

std::vector<AicComparison> compare_traces(std::span<const SimulationTrace> a,
                                          std::span<const SimulationTrace> b) {
  if (a.size() != b.size()) throw InputError("compare: traces cover different participants");
  std::vector<AicComparison> rows;
  std::vector<const TrialRecord*> pooled_a, pooled_b;
  for (std::size_t p = 0; p < a.size(); ++p) {
    if (a[p].participant != b[p].participant || a[p].records.size() != b[p].records.size()) {
      throw InputError("compare: participant '" + a[p].participant + "' differs between traces");
    }
    std::vector<const TrialRecord*> ra, rb;
    for (std::size_t i = 0; i < a[p].records.size(); ++i) {
      if (a[p].records[i].trial.order != b[p].records[i].trial.order) {
        throw InputError("compare: trial order differs for participant '" + a[p].participant + "'");
      }
      ra.push_back(&a[p].records[i]);
      rb.push_back(&b[p].records[i]);
    }
    pooled_a.insert(pooled_a.end(), ra.begin(), ra.end());
    pooled_b.insert(pooled_b.end(), rb.begin(), rb.end());
    auto fa = fit_trace_records(ra);
    auto fb = fit_trace_records(rb);
    rows.push_back({a[p].participant, fa.n, fa.aic, fb.aic, compare_aic(fa, fb)});
  }
  auto fa = fit_trace_records(pooled_a);
  auto fb = fit_trace_records(pooled_b);
  rows.push_back({"pooled", fa.n, fa.aic, fb.aic, compare_aic(fa, fb)});
  return rows;
}

std::string format_comparison(std::span<const AicComparison> rows) {
  std::ostringstream out;
  out << "participant\tn\taic_a\taic_b\taic_diff\n";
  for (const auto& r : rows) {
    out << r.participant << '\t' << r.n << '\t' << io::format_double(r.aic_a) << '\t'
        << io::format_double(r.aic_b) << '\t' << io::format_double(r.diff) << '\n';
  }
  return out.str();
}

std::vector<AvgRtRow> extract_avg_rt_table(const SimulationLexicon& lex,
                                           std::span<const RegimeModel> models,
                                           const std::map<std::string, double>& rts) {
  Matrix form = build_form_matrix(lex.lexicon.entries(), lex.inventory, UnknownCues::skip);
  std::vector<Matrix> predictions;
  for (const auto& m : models) {
    check_model(m.model, lex);
    predictions.push_back(predict(m.model, form));
  }
  std::vector<AvgRtRow> rows;
  for (std::size_t i = 0; i < lex.lexicon.size(); ++i) {
    const auto& e = lex.lexicon[i];
    auto rt = rts.find(e.form);
    if (rt == rts.end()) continue;
    AvgRtRow row{e.form, {}, rt_inverse(rt->second).value};
    auto r = static_cast<Eigen::Index>(i);
    for (const auto& p : predictions) {
      row.target_correlation.push_back(
          pearson(p.row(r), lex.semantics.row(static_cast<Eigen::Index>(e.sem_index))));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_avg_rt_table(std::span<const RegimeModel> models,
                                std::span<const AvgRtRow> rows) {
  std::ostringstream out;
  out << "form";
  for (const auto& m : models) out << '\t' << m.name;
  out << "\trt_inv\n";
  for (const auto& r : rows) {
    out << r.form;
    for (double c : r.target_correlation) out << '\t' << io::format_double(c);
    out << '\t' << io::format_double(r.rt_inv) << '\n';
  }
  return out.str();
}

}  // namespace dlm
