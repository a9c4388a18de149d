#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hyrank/metrics.hpp"
#include "hyrank/model.hpp"
#include "hyrank/ranker.hpp"
#include "toy_support.hpp"

using namespace hyrank;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
  std::string cmd = std::string(HYRANK_BIN) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof(buf), pipe)) output.append(buf, n);
  int status = pclose(pipe);
  return {WEXITSTATUS(status), output};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

// Writes one toy dataset (embeddings, pairs, vocab, terms) into dir.
struct ToyFiles {
  fs::path dir, embeddings, data, vocab, terms;
};

ToyFiles write_toy(const toy::ToyData& data, const fs::path& dir) {
  fs::create_directories(dir);
  ToyFiles files{dir, dir / "emb.txt", dir / "pairs.tsv", dir / "vocab.txt", dir / "terms.txt"};
  {
    std::ofstream out(files.embeddings);
    write_word_embeddings(out, data.table);
  }
  {
    std::ofstream pairs(files.data);
    std::ofstream terms(files.terms);
    for (const auto& pair : data.pairs) {
      pairs << pair.term;
      for (const auto& g : pair.gold) pairs << '\t' << g;
      pairs << '\n';
      terms << pair.term << '\n';
    }
  }
  {
    std::ofstream out(files.vocab);
    for (const auto& v : data.vocab) out << v << '\n';
  }
  return files;
}

const fs::path kWork = fs::temp_directory_path() / "hyrank_cli_test";

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  CHECK(run("").exit_code == 1);
  CHECK(run("bogus").exit_code == 1);
  CHECK(run("train --no-such-flag").exit_code == 1);
  CHECK(run("--help").exit_code == 0);
}

TEST_CASE("train writes a loadable checkpoint; epochs=0 keeps the init") {
  auto data = toy::make_cluster_toy(1);
  ToyFiles files = write_toy(data, kWork / "train0");
  fs::path ckpt = files.dir / "model.ckpt";
  RunResult r = run("train --embeddings " + files.embeddings.string() + " --data " +
                    files.data.string() + " --vocab " + files.vocab.string() +
                    " --encoder gru --hidden 8 --epochs 0 --seed 5 --out " + ckpt.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("epoch   0") != std::string::npos);

  Checkpoint loaded = load_checkpoint(ckpt.string());
  CHECK(loaded.encoder.kind == EncoderKind::Gru);
  CHECK(loaded.encoder.hidden_dim == 8);
  CHECK(loaded.epochs_trained == 0);
  CHECK(loaded.best_epoch == 0);

  // epochs=0 keeps the freshly initialized parameters
  EncoderParams init = init_encoder_params(loaded.encoder, 5);
  auto expected = param_tensors(init);
  REQUIRE(expected.size() == loaded.tensors.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(expected[i]->values == loaded.tensors[i].values);
  }
}

TEST_CASE("checkpoint round-trip is byte-identical") {
  auto data = toy::make_cluster_toy(2);
  EncoderConfig cfg;
  cfg.kind = EncoderKind::Rcnn;
  cfg.input_dim = 10;
  cfg.hidden_dim = 6;
  cfg.rcnn_order = 2;
  Model m = make_model(cfg, data.table, 9);
  Checkpoint original = checkpoint_from_model(m, 9, "seed=9\n", 0.5, 3);

  fs::create_directories(kWork);
  fs::path first = kWork / "a.ckpt";
  fs::path second = kWork / "b.ckpt";
  save_checkpoint(first.string(), original);
  Checkpoint reloaded = load_checkpoint(first.string());
  save_checkpoint(second.string(), reloaded);
  CHECK(slurp(first) == slurp(second));
  CHECK(reloaded.best_val_mrr == 0.5);
  CHECK(reloaded.best_epoch == 3);
  CHECK(reloaded.run_config_text == "seed=9\n");

  Model back = model_from_checkpoint(reloaded, data.table);
  auto a = param_tensors(m.params);
  auto b = param_tensors(back.params);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i]->values == b[i]->values);

  spit(kWork / "junk.ckpt", "not a checkpoint");
  CHECK_THROWS_AS(load_checkpoint((kWork / "junk.ckpt").string()), ParseError);
}

TEST_CASE("train + rank are deterministic end to end") {
  auto data = toy::make_cluster_toy(3);
  ToyFiles files = write_toy(data, kWork / "determinism");
  std::string base = "train --embeddings " + files.embeddings.string() + " --data " +
                     files.data.string() + " --vocab " + files.vocab.string() +
                     " --encoder gru --hidden 8 --epochs 2 --seed 7 --dropout 0.1 --out ";
  fs::path ckpt1 = files.dir / "m1.ckpt";
  fs::path ckpt2 = files.dir / "m2.ckpt";
  CHECK(run(base + ckpt1.string()).exit_code == 0);
  CHECK(run(base + ckpt2.string()).exit_code == 0);
  REQUIRE(slurp(ckpt1) == slurp(ckpt2));

  std::string rank_base = "rank --checkpoint " + ckpt1.string() + " --terms " +
                          files.terms.string() + " --vocab " + files.vocab.string() + " --out ";
  fs::path pred1 = files.dir / "p1.tsv";
  fs::path pred2 = files.dir / "p2.tsv";
  CHECK(run(rank_base + pred1.string()).exit_code == 0);
  CHECK(run(rank_base + pred2.string()).exit_code == 0);
  std::string text1 = slurp(pred1);
  CHECK(text1 == slurp(pred2));
  CHECK(!text1.empty());
}

TEST_CASE("rank output reproduces the library ranking and caps at topk") {
  auto data = toy::make_cluster_toy(4);
  ToyFiles files = write_toy(data, kWork / "rank");
  fs::path ckpt = files.dir / "model.ckpt";
  REQUIRE(run("train --embeddings " + files.embeddings.string() + " --data " +
              files.data.string() + " --vocab " + files.vocab.string() +
              " --encoder tea --epochs 0 --seed 2 --out " + ckpt.string())
              .exit_code == 0);

  fs::path pred = files.dir / "pred.tsv";
  REQUIRE(run("rank --checkpoint " + ckpt.string() + " --terms " + files.terms.string() +
              " --vocab " + files.vocab.string() + " --topk 5 --out " + pred.string())
              .exit_code == 0);

  Checkpoint loaded = load_checkpoint(ckpt.string());
  Model model = model_from_checkpoint(loaded, data.table);
  CandidateCache cache = encode_candidates(model, data.vocab);

  std::ifstream in(pred);
  auto preds = load_predictions(in);
  REQUIRE(preds.size() == data.pairs.size());
  for (const auto& pair : data.pairs) {
    RankedList expected = rank_candidates(model, pair.term, cache, 5);
    const auto& got = preds.at(pair.term);
    REQUIRE(got.size() == expected.items.size());
    REQUIRE(got.size() <= 5);
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == expected.items[i].first);
  }
}

TEST_CASE("rank: empty terms file produces empty output, exit 0") {
  auto data = toy::make_cluster_toy(5);
  ToyFiles files = write_toy(data, kWork / "rank_empty");
  spit(files.terms, "");
  fs::path ckpt = files.dir / "model.ckpt";
  REQUIRE(run("train --embeddings " + files.embeddings.string() + " --data " +
              files.data.string() + " --vocab " + files.vocab.string() +
              " --encoder tea --epochs 0 --out " + ckpt.string())
              .exit_code == 0);
  fs::path pred = files.dir / "pred.tsv";
  RunResult r = run("rank --checkpoint " + ckpt.string() + " --terms " + files.terms.string() +
                    " --vocab " + files.vocab.string() + " --out " + pred.string());
  CHECK(r.exit_code == 0);
  CHECK(slurp(pred).empty());
}

TEST_CASE("rank: unrepresentable query keeps its line with no candidates") {
  auto data = toy::make_cluster_toy(6);
  ToyFiles files = write_toy(data, kWork / "rank_oov");
  spit(files.terms, data.pairs[0].term + "\nqqqzzz\n");
  fs::path ckpt = files.dir / "model.ckpt";
  REQUIRE(run("train --embeddings " + files.embeddings.string() + " --data " +
              files.data.string() + " --vocab " + files.vocab.string() +
              " --encoder tea --epochs 0 --out " + ckpt.string())
              .exit_code == 0);
  fs::path pred = files.dir / "pred.tsv";
  RunResult r = run("rank --checkpoint " + ckpt.string() + " --terms " + files.terms.string() +
                    " --vocab " + files.vocab.string() + " --out " + pred.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("1 queries were unrepresentable") != std::string::npos);
  std::ifstream in(pred);
  auto preds = load_predictions(in);
  CHECK(preds.at("qqqzzz").empty());
  CHECK(!preds.at(data.pairs[0].term).empty());
}

TEST_CASE("evaluate prints the metric table") {
  fs::path dir = kWork / "evaluate";
  fs::create_directories(dir);
  spit(dir / "gold.tsv", "q1\ta\tb\nq2\tx\n");
  spit(dir / "pred.tsv", "q1\ta\tb\nq2\tm\tx\n");  // APs 1.0 and 0.5
  RunResult r = run("evaluate --predictions " + (dir / "pred.tsv").string() + " --gold " +
                    (dir / "gold.tsv").string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("75.00") != std::string::npos);

  spit(dir / "perfect.tsv", "q1\tb\ta\nq2\tx\n");  // gold order within the prefix is free
  r = run("evaluate --predictions " + (dir / "perfect.tsv").string() + " --gold " +
          (dir / "gold.tsv").string());
  CHECK(r.output.find("100.00") != std::string::npos);

  spit(dir / "dup_gold.tsv", "q1\ta\nq1\tb\n");
  r = run("evaluate --predictions " + (dir / "pred.tsv").string() + " --gold " +
          (dir / "dup_gold.tsv").string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("line 2") != std::string::npos);
}

TEST_CASE("gradcheck subcommand passes and detects corruption") {
  RunResult ok = run("gradcheck");
  CHECK(ok.exit_code == 0);
  for (const char* name : {"tea", "gru", "lstm", "cnn", "rcnn"}) {
    CHECK(ok.output.find(name) != std::string::npos);
  }
  CHECK(ok.output.find("[ok]") != std::string::npos);
  CHECK(ok.output.find("FAIL") == std::string::npos);

  RunResult bad = run("gradcheck --corrupt");
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("FAIL") != std::string::npos);
}

TEST_CASE("config file feeds flags; unknown keys are rejected") {
  auto data = toy::make_cluster_toy(7);
  ToyFiles files = write_toy(data, kWork / "config");
  fs::path cfg = files.dir / "run.cfg";
  fs::path ckpt = files.dir / "model.ckpt";
  spit(cfg, "embeddings=" + files.embeddings.string() + "\ndata=" + files.data.string() +
                "\nvocab=" + files.vocab.string() + "\nencoder=gru\nhidden_dim=8\nepochs=0\nout=" +
                ckpt.string() + "\n");
  RunResult r = run("train --config " + cfg.string());
  CHECK(r.exit_code == 0);
  CHECK(load_checkpoint(ckpt.string()).encoder.hidden_dim == 8);

  // flags override the config file
  fs::path ckpt2 = files.dir / "model2.ckpt";
  r = run("train --config " + cfg.string() + " --hidden 6 --out " + ckpt2.string());
  CHECK(r.exit_code == 0);
  CHECK(load_checkpoint(ckpt2.string()).encoder.hidden_dim == 6);

  spit(cfg, "embeddings=" + files.embeddings.string() + "\nno_such_key=1\n");
  CHECK(run("train --config " + cfg.string()).exit_code == 1);
}

TEST_CASE("train validates gold-vocabulary containment") {
  auto data = toy::make_cluster_toy(8);
  ToyFiles files = write_toy(data, kWork / "badgold");
  spit(files.data, data.pairs[0].term + "\tnot_in_vocab\n");
  RunResult r = run("train --embeddings " + files.embeddings.string() + " --data " +
                    files.data.string() + " --vocab " + files.vocab.string() +
                    " --encoder tea --epochs 0 --out " + (files.dir / "m.ckpt").string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("not_in_vocab") != std::string::npos);
}

TEST_CASE("rank then evaluate on a converged toy model reaches MRR >= 90") {
  auto data = toy::make_cluster_toy(9);
  ToyFiles files = write_toy(data, kWork / "mrr90");
  fs::path ckpt = files.dir / "model.ckpt";
  REQUIRE(run("train --embeddings " + files.embeddings.string() + " --data " +
              files.data.string() + " --vocab " + files.vocab.string() +
              " --encoder gru --hidden 8 --epochs 3 --seed 4 --out " + ckpt.string())
              .exit_code == 0);
  fs::path pred = files.dir / "pred.tsv";
  REQUIRE(run("rank --checkpoint " + ckpt.string() + " --terms " + files.terms.string() +
              " --vocab " + files.vocab.string() + " --out " + pred.string())
              .exit_code == 0);
  RunResult r = run("evaluate --predictions " + pred.string() + " --gold " + files.data.string());
  REQUIRE(r.exit_code == 0);
  // second line of the table holds the numbers; MRR is column two
  std::istringstream out(r.output);
  std::string header;
  std::getline(out, header);
  double map = 0.0, mrr = 0.0;
  out >> map >> mrr;
  CHECK(mrr >= 90.0);
}

TEST_CASE("grid search trains every combo and reports the best") {
  auto data = toy::make_cluster_toy(10);
  ToyFiles files = write_toy(data, kWork / "grid");
  fs::path ckpt = files.dir / "model.ckpt";
  RunResult r = run("train --embeddings " + files.embeddings.string() + " --data " +
                    files.data.string() + " --vocab " + files.vocab.string() +
                    " --encoder gru --hidden 6 --epochs 1 --grid --out " + ckpt.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("grid: lr=0.001 dropout=0.1") != std::string::npos);
  CHECK(r.output.find("grid: lr=0.01 dropout=0.2") != std::string::npos);
  CHECK(r.output.find("grid best val_mrr") != std::string::npos);
  CHECK(fs::exists(ckpt));
}

TEST_CASE("checkpoint version mismatch is rejected") {
  auto data = toy::make_cluster_toy(12);
  EncoderConfig cfg;
  cfg.kind = EncoderKind::Tea;
  cfg.input_dim = 10;
  cfg.hidden_dim = 10;
  Model m = make_model(cfg, data.table, 1);
  fs::create_directories(kWork);
  fs::path path = kWork / "versioned.ckpt";
  save_checkpoint(path.string(), checkpoint_from_model(m, 1, "", 0.0, 0));
  std::string bytes = slurp(path);
  bytes[4] = 9;  // version field follows the 4-byte magic
  spit(path, bytes);
  CHECK_THROWS_WITH_AS(load_checkpoint(path.string()), doctest::Contains("version"), ParseError);
}

TEST_CASE("HYRANK_SIMD=scalar forces the reference kernels") {
  std::string cmd = "HYRANK_SIMD=scalar " + std::string(HYRANK_BIN) + " gradcheck 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof(buf), pipe)) output.append(buf, n);
  CHECK(WEXITSTATUS(pclose(pipe)) == 0);
  CHECK(output.find("FAIL") == std::string::npos);
}

TEST_CASE("missing files and bad flags map to exit 1") {
  CHECK(run("train --embeddings /no/such/file --data x --vocab y --out z").exit_code == 1);
  CHECK(run("rank --checkpoint /no/such/file --terms x --vocab y --out z").exit_code == 1);
  CHECK(run("evaluate --predictions /no/such/file --gold y").exit_code == 1);
  CHECK(run("train --encoder bogus").exit_code == 1);
}
