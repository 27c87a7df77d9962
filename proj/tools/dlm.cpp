// dlm: build matrices, train mappings, evaluate, simulate lexical decision.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "dlm/errors.hpp"
#include "dlm/evaluate.hpp"
#include "dlm/io.hpp"
#include "dlm/measures.hpp"
#include "dlm/simulate.hpp"

namespace fs = std::filesystem;
using namespace dlm;

namespace {

struct Common {
  std::string out = ".";
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--out", c.out, "output directory")->required();
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--config", "key=value file; command-line flags take precedence");
}

std::string under(const Common& c, const std::string& name) {
  fs::create_directories(c.out);
  return (fs::path(c.out) / name).string();
}

// The persisted output of `build`.
struct Data {
  Lexicon lexicon;
  CueInventory inventory;
  Matrix c;
  Matrix s;
};

Data load_data(const std::string& dir) {
  fs::path d(dir);
  Data data;
  data.lexicon = load_lexicon((d / "lexicon.tsv").string());
  data.inventory = load_inventory((d / "inventory.txt").string());
  data.c = io::load_matrix((d / "C.mat").string());
  data.s = io::load_matrix((d / "S.mat").string());
  auto n = static_cast<Eigen::Index>(data.lexicon.size());
  if (data.c.rows() != n || data.s.rows() != n) {
    throw InputError("data directory " + dir + " is inconsistent: " + std::to_string(n) +
                     " words, C " + shape_string(data.c.rows(), data.c.cols()) + ", S " + shape_string(data.s.rows(), data.s.cols()));
  }
  return data;
}

std::vector<std::string> forms_of(const Lexicon& lex) {
  std::vector<std::string> out;
  for (const auto& e : lex.entries()) out.push_back(e.form);
  return out;
}

// Split file: one `form<TAB>set` line per word.
void save_split(const std::string& path, const Lexicon& lex, const DatasetSplit& split) {
  std::vector<std::string> set(lex.size());
  for (auto i : split.train) set[i] = "train";
  for (auto i : split.validation) set[i] = "validation";
  for (auto i : split.test) set[i] = "test";
  std::ostringstream os;
  os << "form\tset\n";
  for (std::size_t i = 0; i < lex.size(); ++i) os << lex.entries()[i].form << '\t' << set[i] << '\n';
  io::write_text(path, os.str());
}

std::vector<std::size_t> load_split_set(const std::string& path, const Lexicon& lex,
                                        const std::string& which) {
  auto lines = io::read_lines(path);
  if (lines.empty() || lines[0] != "form\tset") throw ParseError(path + ":1: expected header form<TAB>set");
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = io::split(lines[i], '\t');
    if (f.size() != 2) throw ParseError(path + ":" + std::to_string(i + 1) + ": expected 2 fields");
    auto idx = lex.find(f[0]);
    if (!idx) throw InputError(path + ":" + std::to_string(i + 1) + ": unknown word " + f[0]);
    if (f[1] == which) out.push_back(*idx);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Matrix rows_of(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

std::string format_history(const TrainHistory& h) {
  std::ostringstream os;
  os << "epoch\tloss\tval_accuracy\n";
  for (const auto& e : h.epochs) {
    os << e.epoch << '\t' << io::format_double(e.loss) << '\t'
       << (e.val_accuracy ? io::format_double(*e.val_accuracy) : "NA") << '\n';
  }
  return os.str();
}

// ---- build

struct BuildArgs {
  Common common;
  std::string lexicon, embeddings;
  std::size_t n = 3;
};

void cmd_build(const BuildArgs& a) {
  Lexicon lex = load_lexicon(a.lexicon);
  auto inv = CueInventory::build(lex, a.n);
  auto emb = load_embeddings(a.embeddings, lex);
  for (const auto& w : emb.warnings) std::cerr << "warning: " << w << '\n';
  Matrix c = build_form_matrix(lex.entries(), inv);
  io::save_matrix(under(a.common, "C.mat"), c);
  io::save_matrix(under(a.common, "S.mat"), emb.values);
  save_inventory(under(a.common, "inventory.txt"), inv);
  save_lexicon(under(a.common, "lexicon.tsv"), lex);
  std::cout << "words\t" << lex.size() << "\ncues\t" << inv.size() << "\ndim\t"
            << emb.values.cols() << '\n';
}

// ---- train

struct TrainArgs {
  Common common;
  std::string data, regime = "el", direction = "comprehension";
  std::vector<Eigen::Index> hidden{500};
  double lr = 0.001, ridge = kDefaultRelativeRidge, ddl_fraction = 0.9;
  std::size_t batch = 512, epochs = 500, patience = 20, fixed_epochs = 2000, token_epochs = 1;
  std::uint64_t token_cap = 10'000'000;
  bool split = false;
};

void cmd_train(const TrainArgs& a) {
  Data d = load_data(a.data);
  RegimeOptions opt;
  opt.relative_ridge = a.ridge;
  opt.hidden = a.hidden;
  opt.ddl_fraction = a.ddl_fraction;
  opt.train.learning_rate = a.lr;
  opt.train.batch_size = a.batch;
  opt.train.max_epochs = a.epochs;
  opt.train.patience = a.patience;
  opt.train.fixed_epochs = a.fixed_epochs;
  opt.train.token_epochs = a.token_epochs;
  opt.train.token_cap = a.token_cap;
  opt.train.seed = a.common.seed;
  auto direction = parse_direction(a.direction);

  std::vector<std::size_t> rows(d.lexicon.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (a.split) {
    auto split = split_dataset(d.c, {0.8, 0.1, 0.1}, a.common.seed);
    save_split(under(a.common, "split.tsv"), d.lexicon, split);
    rows = split.train;
  }
  std::vector<LexiconEntry> entries;
  for (auto i : rows) entries.push_back(d.lexicon.entries()[i]);

  TrainHistory history;
  Model model = fit_regime(parse_regime(a.regime), rows_of(d.c, rows), rows_of(d.s, rows),
                           entries, opt, direction, &history);
  save_model(under(a.common, "model.bin"), model);
  io::write_text(under(a.common, "history.tsv"), format_history(history));

  Matrix input = direction == Direction::comprehension ? d.c : d.s;
  Matrix target = direction == Direction::comprehension ? d.s : d.c;
  auto report = correlation_accuracy(predict(model, rows_of(input, rows)), target, rows);
  std::cout << "regime\t" << a.regime << "\ndirection\t" << a.direction << "\ntrain_accuracy\t"
            << io::format_double(report.accuracy) << '\n';
}

// ---- eval

struct EvalArgs {
  Common common;
  std::string data, model, split, set = "all", name = "model";
  std::size_t k = 10;
};

void cmd_eval(const EvalArgs& a) {
  Data d = load_data(a.data);
  Model model = load_model(a.model);
  auto direction = direction_of(model);
  const Matrix& input = direction == Direction::comprehension ? d.c : d.s;
  const Matrix& target = direction == Direction::comprehension ? d.s : d.c;

  std::vector<std::size_t> items(d.lexicon.size());
  std::iota(items.begin(), items.end(), std::size_t{0});
  if (a.set != "all") {
    if (a.split.empty()) throw InputError("--set " + a.set + " needs --split");
    items = load_split_set(a.split, d.lexicon, a.set);
    if (items.empty()) throw InputError("split set " + a.set + " is empty");
  }
  auto report = correlation_accuracy(predict(model, rows_of(input, items)), target, items, a.k);
  std::vector<double> freqs;
  std::vector<std::string> forms;
  for (auto i : items) {
    freqs.push_back(static_cast<double>(d.lexicon.entries()[i].frequency));
    forms.push_back(d.lexicon.entries()[i].form);
  }
  double total = 0;
  for (double f : freqs) total += f;
  if (total > 0) report.token_weighted_accuracy = token_weighted_accuracy(report, freqs);

  io::write_text(under(a.common, "eval_" + a.name + ".tsv"), format_report(report, forms));
  std::ostringstream os;
  os << "model\tset\tdirection\tn_items\tk\taccuracy\taccuracy_at_k\ttoken_weighted_accuracy\n"
     << a.name << '\t' << a.set << '\t' << to_string(direction) << '\t' << report.n_items << '\t'
     << report.k << '\t' << io::format_double(report.accuracy) << '\t'
     << io::format_double(report.accuracy_at_k) << '\t'
     << (report.token_weighted_accuracy ? io::format_double(*report.token_weighted_accuracy) : "NA")
     << '\n';
  io::write_text(under(a.common, "eval_" + a.name + "_summary.tsv"), os.str());
  std::cout << os.str();
}

// ---- simulate

struct SimulateArgs {
  Common common;
  std::string data, model, trials, mode = "static", name = "trace";
  double rate = kDefaultWidrowHoffRate;
  bool update_nonwords = false;
};

void cmd_simulate(const SimulateArgs& a) {
  Data d = load_data(a.data);
  Model model = load_model(a.model);
  auto trials = load_trials(a.trials);
  SimulationConfig cfg;
  if (a.mode == "static") {
    cfg.mode = SimMode::static_mode;
  } else if (a.mode == "dynamic") {
    cfg.mode = SimMode::dynamic_mode;
  } else {
    throw InputError("unknown mode '" + a.mode + "' (static|dynamic)");
  }
  cfg.rate = a.rate;
  cfg.update_nonwords = a.update_nonwords;
  cfg.threads = a.common.threads;
  SimulationLexicon view{d.lexicon, d.inventory, d.s};
  auto traces = simulate_participants(trials, model, view, cfg);
  io::write_text(under(a.common, a.name + ".tsv"), format_traces(traces));
  std::size_t n = 0;
  for (const auto& t : traces) n += t.records.size();
  std::cout << "participants\t" << traces.size() << "\ntrials\t" << n << '\n';
}

// ---- measures

struct MeasuresArgs {
  Common common;
  std::string data;
};

void cmd_measures(const MeasuresArgs& a) {
  Data d = load_data(a.data);
  auto m = compute_measures(d.lexicon.entries(), d.c, d.s);
  io::write_text(under(a.common, "measures.tsv"), format_measures(d.lexicon.entries(), m));
  std::cout << "words\t" << m.size() << '\n';
}

// ---- compare

struct CompareArgs {
  Common common;
  std::string a, b, rts, data;
  std::vector<std::string> models;
};

std::map<std::string, double> load_average_rts(const std::string& path) {
  auto lines = io::read_lines(path);
  if (lines.empty() || lines[0] != "form\trt_ms") {
    throw ParseError(path + ":1: expected header form<TAB>rt_ms");
  }
  std::map<std::string, double> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = io::split(lines[i], '\t');
    std::string where = path + ":" + std::to_string(i + 1);
    if (f.size() != 2) throw ParseError(where + ": expected 2 fields");
    out[f[0]] = io::parse_double(f[1], where);
  }
  return out;
}

void cmd_compare(const CompareArgs& a) {
  auto ta = load_traces(a.a);
  auto tb = load_traces(a.b);
  auto rows = compare_traces(ta, tb);
  io::write_text(under(a.common, "compare.tsv"), format_comparison(rows));
  std::cout << format_comparison(rows);

  if (a.rts.empty()) return;
  if (a.data.empty() || a.models.empty()) throw InputError("--rts needs --data and --model");
  Data d = load_data(a.data);
  std::vector<RegimeModel> models;
  for (const auto& spec : a.models) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) throw InputError("--model expects name=path, got '" + spec + "'");
    models.push_back({spec.substr(0, eq), load_model(spec.substr(eq + 1))});
  }
  SimulationLexicon view{d.lexicon, d.inventory, d.s};
  auto table = extract_avg_rt_table(view, models, load_average_rts(a.rts));
  io::write_text(under(a.common, "avg_rt.tsv"), format_avg_rt_table(models, table));
}

// ---- neighbours

struct NeighboursArgs {
  Common common;
  std::string data, model;
  std::size_t k = 10;
};

void cmd_neighbours(const NeighboursArgs& a) {
  Data d = load_data(a.data);
  auto forms = forms_of(d.lexicon);
  std::ostringstream os;
  os << "form\trank\tneighbour\tcorrelation\n";
  if (a.model.empty()) {
    // Semantic neighbours of each word, itself excluded.
    auto nn = nearest_neighbours(d.s, d.s, std::min<std::size_t>(a.k + 1, forms.size()));
    for (std::size_t i = 0; i < nn.size(); ++i) {
      std::size_t rank = 0;
      for (const auto& n : nn[i]) {
        if (n.index == i || rank == a.k) continue;
        os << forms[i] << '\t' << ++rank << '\t' << forms[n.index] << '\t'
           << io::format_double(n.correlation) << '\n';
      }
    }
  } else {
    Model model = load_model(a.model);
    if (direction_of(model) != Direction::comprehension) {
      throw InputError("neighbours needs a comprehension model");
    }
    auto nn = nearest_neighbours(predict(model, d.c), d.s, std::min(a.k, forms.size()));
    for (std::size_t i = 0; i < nn.size(); ++i) {
      for (std::size_t r = 0; r < nn[i].size(); ++r) {
        os << forms[i] << '\t' << r + 1 << '\t' << forms[nn[i][r].index] << '\t'
           << io::format_double(nn[i][r].correlation) << '\n';
      }
    }
  }
  io::write_text(under(a.common, "neighbours.tsv"), os.str());
}

// Splices `key=value` lines from --config into argv as `--key value`, skipping
// keys already given on the command line.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  auto it = std::find(args.begin(), args.end(), "--config");
  if (it == args.end()) return args;
  if (it + 1 == args.end()) throw InputError("--config needs a path");
  std::string path = *(it + 1);
  args.erase(it, it + 2);

  std::set<std::string> given;
  for (const auto& arg : args) {
    if (arg.rfind("--", 0) == 0) given.insert(arg.substr(2, arg.find('=') - 2));
  }
  auto lines = io::read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(path + ":" + std::to_string(i + 1) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t");
      auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (given.count(key)) continue;
    args.push_back("--" + key);
    args.push_back(value);
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discriminative lexicon models: linear and deep form-meaning mappings"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* b = app.add_subcommand("build", "build C, S and the cue inventory");
  add_common(b, build.common);
  b->add_option("--lexicon", build.lexicon, "lexicon TSV")->required();
  b->add_option("--embeddings", build.embeddings, "embeddings text file")->required();
  b->add_option("--n", build.n, "cue n-gram size")->check(CLI::PositiveNumber);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "fit a comprehension or production mapping");
  add_common(t, train.common);
  t->add_option("--data", train.data, "directory written by build")->required();
  t->add_option("--regime", train.regime)->check(CLI::IsMember({"el", "fil", "ddl", "eddl", "fiddl"}));
  t->add_option("--direction", train.direction)
      ->check(CLI::IsMember({"comprehension", "production"}));
  t->add_option("--hidden", train.hidden, "hidden layer widths")->delimiter(',');
  t->add_option("--lr", train.lr);
  t->add_option("--batch", train.batch);
  t->add_option("--epochs", train.epochs, "maximum epochs with early stopping");
  t->add_option("--patience", train.patience);
  t->add_option("--fixed-epochs", train.fixed_epochs, "epochs for eddl");
  t->add_option("--token-epochs", train.token_epochs, "passes over the token list for fiddl");
  t->add_option("--token-cap", train.token_cap);
  t->add_option("--ridge", train.ridge, "ridge relative to the mean Gram diagonal");
  t->add_option("--ddl-fraction", train.ddl_fraction);
  t->add_flag("--split", train.split, "train on an 80/10/10 split (written to split.tsv)");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "correlation accuracy of a trained model");
  add_common(e, eval.common);
  e->add_option("--data", eval.data)->required();
  e->add_option("--model", eval.model)->required();
  e->add_option("--split", eval.split, "split.tsv from train --split");
  e->add_option("--set", eval.set)->check(CLI::IsMember({"all", "train", "validation", "test"}));
  e->add_option("--k", eval.k)->check(CLI::PositiveNumber);
  e->add_option("--name", eval.name, "output name stem");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "replay lexical decision trials");
  add_common(s, sim.common);
  s->add_option("--data", sim.data)->required();
  s->add_option("--model", sim.model)->required();
  s->add_option("--trials", sim.trials)->required();
  s->add_option("--mode", sim.mode)->check(CLI::IsMember({"static", "dynamic"}));
  s->add_option("--rate", sim.rate, "Widrow-Hoff learning rate");
  s->add_flag("--update-nonwords", sim.update_nonwords);
  s->add_option("--name", sim.name, "output name stem");

  MeasuresArgs meas;
  auto* m = app.add_subcommand("measures", "per-word lexical similarity measures");
  add_common(m, meas.common);
  m->add_option("--data", meas.data)->required();

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "AIC comparison of two simulation traces");
  add_common(c, cmp.common);
  c->add_option("--a", cmp.a, "first trace")->required();
  c->add_option("--b", cmp.b, "second trace")->required();
  c->add_option("--rts", cmp.rts, "average RTs (form<TAB>rt_ms) for avg_rt.tsv");
  c->add_option("--data", cmp.data);
  c->add_option("--model", cmp.models, "name=path, repeatable");

  NeighboursArgs nb;
  auto* n = app.add_subcommand("neighbours", "top-k semantic neighbours per word");
  add_common(n, nb.common);
  n->add_option("--data", nb.data)->required();
  n->add_option("--model", nb.model, "rank neighbours of predicted vectors instead");
  n->add_option("--k", nb.k)->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);

    if (*b) cmd_build(build);
    if (*t) cmd_train(train);
    if (*e) cmd_eval(eval);
    if (*s) cmd_simulate(sim);
    if (*m) cmd_measures(meas);
    if (*c) cmd_compare(cmp);
    if (*n) cmd_neighbours(nb);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h);
  } catch (const CLI::ParseError& err) {
    std::cerr << "error: usage: " << err.what() << '\n';
    return 2;
  } catch (const Error& err) {
    std::cerr << "error: " << err.kind() << ": " << err.what() << '\n';
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: internal: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
