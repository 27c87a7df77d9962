#include "doctest.h"

#include <filesystem>

#include "dlm/evaluate.hpp"
#include "dlm/io.hpp"
#include "dlm/simulate.hpp"
#include "test_support.hpp"

using namespace dlm;
using dlm::test::fixture;

namespace {

struct World {
  Lexicon lexicon = load_lexicon(fixture("lexicon.tsv"));
  CueInventory inventory = CueInventory::build(lexicon);
  Matrix c = build_form_matrix(lexicon.entries(), inventory);
  Matrix s = load_embeddings(fixture("embeddings.txt"), lexicon).values;
  LinearMapping el = estimate_endstate(c, s);

  SimulationLexicon view() const { return {lexicon, inventory, s}; }
};

const World& world() {
  static const World w;
  return w;
}

Trial trial(const std::string& form, bool word, long order, double rt = 600) {
  return {"p", order, form, word, rt};
}

std::vector<double> measures(const SimulationTrace& t) {
  std::vector<double> out;
  for (const auto& r : t.records) out.push_back(r.measure);
  return out;
}

}  // namespace

TEST_CASE("rt_inverse") {
  CHECK(rt_inverse(500).value == -2.0);
  CHECK(rt_inverse(1000).value == -1.0);
  CHECK(rt_inverse(420).value < rt_inverse(421).value);
  CHECK_THROWS_AS(rt_inverse(0), InputError);
  CHECK_THROWS_AS(rt_inverse(-3), InputError);
}

TEST_CASE("load_trials") {
  auto trials = load_trials(fixture("trials.tsv"));
  CHECK(trials.size() == 180);
  CHECK(trials[0].participant == "p01");
  CHECK(trials[0].order == 1);
  auto path = (std::filesystem::temp_directory_path() / "dlm_bad_trials.tsv").string();
  io::write_text(path, "participant\torder\tform\tis_word\trt_ms\np\t1\tbaba\t1\t-5\n");
  CHECK_THROWS_AS(load_trials(path), ParseError);
}

TEST_CASE("static simulation") {
  const auto& w = world();
  std::vector<Trial> trials{trial("baba", true, 1), trial("baba", true, 2),
                            trial("bakasi", false, 3), trial("zuzu", false, 4),
                            trial("kimo", true, 5)};
  auto trace = run_static(trials, w.el, w.view());
  REQUIRE(trace.records.size() == trials.size());
  CHECK(trace.mode == SimMode::static_mode);
  CHECK(trace.engine == Engine::linear);
  CHECK(trace.records[0].measure == trace.records[1].measure);
  CHECK(trace.records[3].unknown_cues == 4);
  CHECK(trace.records[2].unknown_cues == 0);
  CHECK(trace.records[0].rt_inv == rt_inverse(600).value);

  // Direct recomputation.
  auto idx = *w.lexicon.find("kimo");
  RowVector pred = w.c.row(static_cast<Eigen::Index>(idx)) * w.el.weights;
  CHECK(trace.records[4].measure ==
        doctest::Approx(pearson(pred, w.s.row(static_cast<Eigen::Index>(idx)))).epsilon(1e-12));
  auto nonword = form_vector(segment_form("bakasi", UnitMode::letters), w.inventory);
  RowVector npred = nonword.row * w.el.weights;
  double best = -1;
  for (Eigen::Index j = 0; j < w.s.rows(); ++j) best = std::max(best, pearson(npred, w.s.row(j)));
  CHECK(trace.records[2].measure == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("simulation input errors") {
  const auto& w = world();
  std::vector<Trial> unknown{trial("zuzu", true, 1)};
  CHECK_THROWS_AS(run_static(unknown, w.el, w.view()), InputError);
  std::vector<Trial> backwards{trial("baba", true, 2), trial("babi", true, 1)};
  CHECK_THROWS_AS(run_static(backwards, w.el, w.view()), InputError);
  std::vector<Trial> mixed{trial("baba", true, 1), {"q", 2, "babi", true, 500}};
  CHECK_THROWS_AS(run_static(mixed, w.el, w.view()), InputError);
  LinearMapping prod = w.el;
  prod.direction = Direction::production;
  std::vector<Trial> ok{trial("baba", true, 1)};
  CHECK_THROWS_AS(run_static(ok, prod, w.view()), InputError);
}

TEST_CASE("dynamic simulation") {
  const auto& w = world();
  auto trials = load_trials(fixture("trials.tsv"));
  std::vector<Trial> p1(trials.begin(), trials.begin() + 60);
  LinearMapping start{Matrix::Zero(w.c.cols(), w.s.cols()), Direction::comprehension,
                      Provenance::incremental};
  Model model = estimate_endstate(w.c, w.s, 1e-2);

  auto stat = run_static(p1, model, w.view());
  auto zero = run_dynamic(p1, model, w.view(), 0.0);
  CHECK(measures(stat) == measures(zero));

  // Consecutive repetitions: the intervening update raises target correlation.
  std::vector<Trial> twice{trial("sota", true, 1), trial("sota", true, 2)};
  auto rep = run_dynamic(twice, start, w.view(), 0.01);
  CHECK(rep.records[1].measure >= rep.records[0].measure);
  auto rep2 = run_dynamic(twice, model, w.view(), 0.01);
  CHECK(rep2.records[1].measure >= rep2.records[0].measure);

  // Swapping two adjacent trials that share cues changes what follows.
  std::vector<Trial> order_a{trial("baba", true, 1), trial("babi", true, 2),
                             trial("babo", true, 3)};
  std::vector<Trial> order_b{trial("babi", true, 1), trial("baba", true, 2),
                             trial("babo", true, 3)};
  auto ta = run_dynamic(order_a, start, w.view(), 0.02);
  auto tb = run_dynamic(order_b, start, w.view(), 0.02);
  CHECK(ta.records[2].measure != tb.records[2].measure);

  // Nonword updates only when asked.
  std::vector<Trial> with_nonword{trial("bakasi", false, 1), trial("baka", true, 2)};
  auto off = run_dynamic(with_nonword, model, w.view(), 0.05, false);
  auto on = run_dynamic(with_nonword, model, w.view(), 0.05, true);
  auto ref = run_static(with_nonword, model, w.view());
  CHECK(off.records[1].measure == ref.records[1].measure);
  CHECK(on.records[1].measure != ref.records[1].measure);
}

TEST_CASE("deep and linear engines agree on a bias-free zero-hidden net") {
  const auto& w = world();
  auto trials = load_trials(fixture("trials.tsv"));
  std::vector<Trial> p1(trials.begin(), trials.begin() + 60);
  std::vector<Eigen::Index> none;
  auto net = make_mlp(w.c.cols(), none, w.s.cols(), Direction::comprehension, 1, false);
  LinearMapping map{net.layers[0].weights, Direction::comprehension, Provenance::incremental};
  auto lin = run_dynamic(p1, map, w.view(), 0.002);
  auto deep = run_dynamic(p1, net, w.view(), 0.001);
  CHECK(deep.engine == Engine::deep);
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK(std::abs(lin.records[i].measure - deep.records[i].measure) < 1e-9);
  }
}

TEST_CASE("participants simulate independently of thread count") {
  const auto& w = world();
  auto trials = load_trials(fixture("trials.tsv"));
  SimulationConfig cfg;
  cfg.mode = SimMode::dynamic_mode;
  cfg.rate = 0.001;
  Model model = w.el;
  auto one = simulate_participants(trials, model, w.view(), cfg);
  cfg.threads = 4;
  auto four = simulate_participants(trials, model, w.view(), cfg);
  REQUIRE(one.size() == 3);
  CHECK(format_traces(one) == format_traces(four));
  CHECK(one[0].participant == "p01");
}

TEST_CASE("trace export round-trips and feeds the AIC comparison") {
  const auto& w = world();
  auto trials = load_trials(fixture("trials.tsv"));
  Model model = w.el;
  SimulationConfig cfg;
  auto stat = simulate_participants(trials, model, w.view(), cfg);
  cfg.mode = SimMode::dynamic_mode;
  cfg.rate = 0.002;
  auto dyn = simulate_participants(trials, model, w.view(), cfg);

  auto path = (std::filesystem::temp_directory_path() / "dlm_trace.tsv").string();
  io::write_text(path, format_traces(dyn));
  auto back = load_traces(path);
  CHECK(format_traces(back) == format_traces(dyn));
  CHECK(back[0].mode == SimMode::dynamic_mode);

  auto same = compare_traces(stat, stat);
  for (const auto& row : same) CHECK(row.diff == 0.0);
  auto rows = compare_traces(stat, dyn);
  REQUIRE(rows.size() == 4);
  CHECK(rows.back().participant == "pooled");
  CHECK(rows.back().n == 180);
  auto flipped = compare_traces(dyn, stat);
  CHECK(flipped[0].diff == -rows[0].diff);
}

TEST_CASE("average-RT table") {
  const auto& w = world();
  // A mapping that reproduces S exactly: targets projected onto the form space.
  Matrix s_fit = predict(w.el, w.c);
  World exact_world;
  exact_world.s = s_fit;
  std::vector<RegimeModel> models{{"el", w.el}, {"exact", estimate_endstate(w.c, s_fit)}};
  std::map<std::string, double> rts{{"baba", 500}, {"kimo", 640}, {"nope", 700}};
  auto rows = extract_avg_rt_table(exact_world.view(), models, rts);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].form == "baba");
  CHECK(rows[0].rt_inv == -2.0);
  CHECK(rows[0].target_correlation[1] == doctest::Approx(1.0).epsilon(1e-9));

  auto idx = static_cast<Eigen::Index>(*w.lexicon.find("kimo"));
  CHECK(rows[1].target_correlation[0] ==
        doctest::Approx(pearson(predict(w.el, w.c).row(idx), s_fit.row(idx))).epsilon(1e-12));
  auto text = format_avg_rt_table(models, rows);
  CHECK(text.rfind("form\tel\texact\trt_inv\n", 0) == 0);
}

TEST_CASE("fit_regime builds every regime") {
  const auto& w = world();
  RegimeOptions opt;
  opt.hidden = {16};
  opt.train.batch_size = 64;
  opt.train.learning_rate = 0.01;
  opt.train.max_epochs = 5;
  opt.train.patience = 2;
  opt.train.fixed_epochs = 3;
  opt.train.token_cap = 5000;
  for (auto r : {Regime::el, Regime::fil, Regime::ddl, Regime::eddl, Regime::fiddl}) {
    TrainHistory hist;
    Model m = fit_regime(r, w.c, w.s, w.lexicon.entries(), opt, Direction::comprehension, &hist);
    bool linear = r == Regime::el || r == Regime::fil;
    CHECK(std::holds_alternative<LinearMapping>(m) == linear);
    CHECK(predict(m, w.c).cols() == w.s.cols());
    if (r == Regime::eddl) CHECK(hist.epochs.size() == 3);
  }
  Model prod = fit_regime(Regime::el, w.c, w.s, w.lexicon.entries(), opt, Direction::production);
  CHECK(predict(prod, w.s).cols() == w.c.cols());
  CHECK(direction_of(prod) == Direction::production);
  CHECK(parse_regime("fiddl") == Regime::fiddl);
  CHECK_THROWS_AS(parse_regime("xl"), InputError);
}

TEST_CASE("model files dispatch on their magic") {
  const auto& w = world();
  auto dir = std::filesystem::temp_directory_path();
  save_model((dir / "dlm_m1.bin").string(), w.el);
  std::vector<Eigen::Index> h{4};
  save_model((dir / "dlm_m2.bin").string(),
             make_mlp(w.c.cols(), h, w.s.cols(), Direction::comprehension, 1));
  CHECK(std::holds_alternative<LinearMapping>(load_model((dir / "dlm_m1.bin").string())));
  CHECK(std::holds_alternative<DeepNetwork>(load_model((dir / "dlm_m2.bin").string())));
}
