#include "doctest.h"

#include <sys/wait.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dlm/io.hpp"
#include "dlm/measures.hpp"
#include "dlm/simulate.hpp"
#include "test_support.hpp"

using namespace dlm;
using dlm::test::fixture;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("dlm_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI inside `cwd` with stdout and stderr captured next to it.
Run dlm_cli(const fs::path& cwd, const std::string& args) {
  auto out = cwd.string() + ".stdout";
  auto err = cwd.string() + ".stderr";
  std::string cmd = "cd '" + cwd.string() + "' && '" + DLM_CLI + "' " + args + " >'" + out +
                    "' 2>'" + err + "'";
  int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string build_args(const std::string& out) {
  return "build --lexicon '" + fixture("lexicon.tsv") + "' --embeddings '" +
         fixture("embeddings.txt") + "' --out " + out;
}

std::string column(const std::string& table, std::size_t col) {
  std::string out;
  std::istringstream in(table);
  std::string line;
  while (std::getline(in, line)) out += io::split(line, '\t').at(col) + "\n";
  return out;
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("build is deterministic and reports the cue count") {
  auto dir = scratch("build");
  auto a = dlm_cli(dir, build_args("a"));
  auto b = dlm_cli(dir, build_args("b"));
  REQUIRE(a.status == 0);
  REQUIRE(b.status == 0);
  for (const char* f : {"C.mat", "S.mat", "inventory.txt", "lexicon.tsv"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  auto inv = load_inventory((dir / "a" / "inventory.txt").string());
  CHECK(a.out.find("cues\t" + std::to_string(inv.size()) + "\n") != std::string::npos);

  // Recount from the lexicon alone.
  auto lex = load_lexicon(fixture("lexicon.tsv"));
  std::set<std::string> cues;
  for (const auto& e : lex.entries()) {
    for (const auto& c : extract_cues(e.units, 3)) cues.insert(c);
  }
  CHECK(inv.size() == cues.size());
  // Only the output directory appears in the working directory.
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
  CHECK(entries == 2);
}

TEST_CASE("a word without an embedding fails with its name") {
  auto dir = scratch("missing");
  auto lines = io::read_lines(fixture("embeddings.txt"));
  std::string dropped, kept;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].rfind("kimo ", 0) == 0) {
      dropped = lines[i];
      continue;
    }
    kept += lines[i] + "\n";
  }
  REQUIRE_FALSE(dropped.empty());
  io::write_text((dir / "emb.txt").string(), kept);
  auto r = dlm_cli(dir, "build --lexicon '" + fixture("lexicon.tsv") +
                            "' --embeddings emb.txt --out data");
  CHECK(r.status != 0);
  CHECK(r.err.rfind("error: input: ", 0) == 0);
  CHECK(r.err.find("kimo") != std::string::npos);
  CHECK(line_count(r.err) == 1);
}

TEST_CASE("train, eval, simulate, measures, compare, neighbours") {
  auto dir = scratch("pipeline");
  REQUIRE(dlm_cli(dir, build_args("data")).status == 0);

  SUBCASE("el reaches full training accuracy") {
    REQUIRE(dlm_cli(dir, "train --data data --regime el --out el").status == 0);
    auto r = dlm_cli(dir, "eval --data data --model el/model.bin --name el --out ev");
    REQUIRE(r.status == 0);
    auto summary = io::read_lines((dir / "ev" / "eval_el_summary.tsv").string());
    REQUIRE(summary.size() == 2);
    auto f = io::split(summary[1], '\t');
    CHECK(f[5] == "1");
    CHECK(line_count(slurp(dir / "ev" / "eval_el.tsv")) == 577);
  }

  SUBCASE("deep training is reproducible under a fixed seed") {
    std::string args = " --data data --regime ddl --hidden 16 --lr 0.01 --batch 32 --epochs 20 "
                       "--patience 5 --seed 7 --threads 1 --out ";
    REQUIRE(dlm_cli(dir, "train" + args + "d1").status == 0);
    REQUIRE(dlm_cli(dir, "train" + args + "d2").status == 0);
    CHECK(slurp(dir / "d1" / "model.bin") == slurp(dir / "d2" / "model.bin"));
    CHECK(slurp(dir / "d1" / "history.tsv") == slurp(dir / "d2" / "history.tsv"));
  }

  SUBCASE("split training and held-out evaluation") {
    REQUIRE(dlm_cli(dir, "train --data data --regime el --split --seed 3 --out sp").status == 0);
    auto r = dlm_cli(dir, "eval --data data --model sp/model.bin --split sp/split.tsv --set test "
                          "--name test --out sp");
    REQUIRE(r.status == 0);
    auto split = io::read_lines((dir / "sp" / "split.tsv").string());
    std::size_t tests = 0;
    for (const auto& l : split) tests += l.ends_with("\ttest");
    CHECK(line_count(slurp(dir / "sp" / "eval_test.tsv")) == tests + 1);
  }

  SUBCASE("production direction") {
    REQUIRE(dlm_cli(dir, "train --data data --regime fil --direction production --out pr").status == 0);
    REQUIRE(dlm_cli(dir, "eval --data data --model pr/model.bin --out pr").status == 0);
    auto summary = io::read_lines((dir / "pr" / "eval_model_summary.tsv").string());
    CHECK(io::split(summary[1], '\t')[2] == "production");
  }

  SUBCASE("simulation traces") {
    REQUIRE(dlm_cli(dir, "train --data data --regime el --out el").status == 0);
    std::string base = "simulate --data data --model el/model.bin --trials '" +
                       fixture("trials.tsv") + "' --out sim ";
    REQUIRE(dlm_cli(dir, base + "--name static").status == 0);
    REQUIRE(dlm_cli(dir, base + "--name zero --mode dynamic --rate 0").status == 0);
    REQUIRE(dlm_cli(dir, base + "--name dyn --mode dynamic --rate 0.001").status == 0);
    REQUIRE(dlm_cli(dir, base + "--name dyn4 --mode dynamic --rate 0.001 --threads 4").status == 0);
    auto stat = slurp(dir / "sim" / "static.tsv");
    CHECK(column(stat, 6) == column(slurp(dir / "sim" / "zero.tsv"), 6));
    CHECK(line_count(stat) == load_trials(fixture("trials.tsv")).size() + 1);
    CHECK(slurp(dir / "sim" / "dyn.tsv") == slurp(dir / "sim" / "dyn4.tsv"));

    auto cmp = dlm_cli(dir, "compare --a sim/static.tsv --b sim/dyn.tsv --out cmp");
    REQUIRE(cmp.status == 0);
    auto rows = io::read_lines((dir / "cmp" / "compare.tsv").string());
    CHECK(rows[0] == "participant\tn\taic_a\taic_b\taic_diff");
    CHECK(rows.back().rfind("pooled\t180\t", 0) == 0);

    io::write_text((dir / "rts.tsv").string(), "form\trt_ms\nbaba\t500\nkimo\t620\n");
    auto avg = dlm_cli(dir, "compare --a sim/static.tsv --b sim/dyn.tsv --rts rts.tsv --data data "
                            "--model el=el/model.bin --out cmp");
    REQUIRE(avg.status == 0);
    auto table = io::read_lines((dir / "cmp" / "avg_rt.tsv").string());
    REQUIRE(table.size() == 3);
    CHECK(table[0] == "form\tel\trt_inv");
    CHECK(table[1].ends_with("\t-2"));
  }

  SUBCASE("measures match the library") {
    REQUIRE(dlm_cli(dir, "measures --data data --out m").status == 0);
    auto lex = load_lexicon(fixture("lexicon.tsv"));
    auto inv = CueInventory::build(lex);
    Matrix c = build_form_matrix(lex.entries(), inv);
    Matrix s = load_embeddings(fixture("embeddings.txt"), lex).values;
    CHECK(slurp(dir / "m" / "measures.tsv") ==
          format_measures(lex.entries(), compute_measures(lex.entries(), c, s)));
  }

  SUBCASE("neighbours") {
    REQUIRE(dlm_cli(dir, "neighbours --data data --k 3 --out nb").status == 0);
    auto text = slurp(dir / "nb" / "neighbours.tsv");
    CHECK(line_count(text) == 576 * 3 + 1);
    CHECK(text.find("baba\t1\tbaba\t") == std::string::npos);
  }
}

TEST_CASE("config files supply flags the command line leaves out") {
  auto dir = scratch("config");
  REQUIRE(dlm_cli(dir, build_args("data")).status == 0);
  io::write_text((dir / "run.cfg").string(),
                 "# deep run\nregime = ddl\nhidden=8\nlr=0.01\nbatch=32\nepochs=5\npatience=2\n"
                 "seed=7\nout=ignored\n");
  REQUIRE(dlm_cli(dir, "train --data data --config run.cfg --out a").status == 0);
  REQUIRE(dlm_cli(dir, "train --data data --regime ddl --hidden 8 --lr 0.01 --batch 32 "
                       "--epochs 5 --patience 2 --seed 7 --out b").status == 0);
  CHECK(slurp(dir / "a" / "model.bin") == slurp(dir / "b" / "model.bin"));
  CHECK_FALSE(fs::exists(dir / "ignored"));
}

TEST_CASE("failures exit nonzero with one prefixed line") {
  auto dir = scratch("errors");
  REQUIRE(dlm_cli(dir, build_args("data")).status == 0);
  auto bad_regime = dlm_cli(dir, "train --data data --regime xl --out t");
  CHECK(bad_regime.status == 2);
  CHECK(bad_regime.err.rfind("error: usage: ", 0) == 0);
  CHECK(line_count(bad_regime.err) == 1);

  auto no_model = dlm_cli(dir, "eval --data data --model nope.bin --out t");
  CHECK(no_model.status == 1);
  CHECK(no_model.err.rfind("error: ", 0) == 0);
  CHECK(line_count(no_model.err) == 1);

  io::write_text((dir / "bad_trials.tsv").string(), "participant\torder\tform\n");
  REQUIRE(dlm_cli(dir, "train --data data --out el").status == 0);
  auto bad = dlm_cli(dir, "simulate --data data --model el/model.bin --trials bad_trials.tsv --out t");
  CHECK(bad.status == 1);
  CHECK(bad.err.rfind("error: parse: ", 0) == 0);
  CHECK_FALSE(fs::exists(dir / "t"));

  CHECK(dlm_cli(dir, "").status != 0);
}
