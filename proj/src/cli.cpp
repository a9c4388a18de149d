#include "hyrank/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hyrank/checks.hpp"
#include "hyrank/metrics.hpp"
#include "hyrank/ranker.hpp"

namespace hyrank {

namespace {

constexpr std::uint64_t kSplitSalt = 0x53504C4954ull;  // train/validation shuffle stream

std::ifstream open_or_throw(const std::string& path, const char* what) {
  if (path.empty()) throw std::invalid_argument(std::string("missing ") + what + " path");
  std::ifstream in(path);
  if (!in) throw ParseError(std::string("cannot open ") + what + " '" + path + "'");
  return in;
}

EmbeddingTable load_table(const RunConfig& cfg, std::optional<std::size_t> expected_dim) {
  auto in = open_or_throw(cfg.embeddings, "embeddings");
  if (cfg.embedding_kind == "word") return load_word_embeddings(in, expected_dim);
  if (cfg.embedding_kind == "sense") {
    EmbeddingTable table = load_sense_embeddings(in);
    if (expected_dim && table.dim() != *expected_dim) {
      throw ParseError("embedding dimension " + std::to_string(table.dim()) +
                       " does not match checkpoint input_dim " + std::to_string(*expected_dim));
    }
    return table;
  }
  throw std::invalid_argument("embedding_kind must be 'word' or 'sense'");
}

std::vector<std::string> load_vocab(const std::string& path) {
  auto in = open_or_throw(path, "vocabulary");
  std::vector<std::string> vocab;
  std::unordered_set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (seen.insert(line).second) vocab.push_back(line);
  }
  if (vocab.empty()) throw ParseError("vocabulary '" + path + "' is empty");
  return vocab;
}

EncoderConfig encoder_config_from(const RunConfig& cfg, std::size_t input_dim) {
  auto kind = parse_encoder_kind(cfg.encoder);
  if (!kind) throw std::invalid_argument("unknown encoder '" + cfg.encoder + "'");
  EncoderConfig enc;
  enc.kind = *kind;
  enc.input_dim = input_dim;
  enc.hidden_dim = cfg.hidden_dim;
  enc.cnn_filter_widths = cfg.cnn_widths;
  enc.rcnn_order = cfg.rcnn_order;
  enc.validate();
  return enc;
}

TrainerConfig trainer_config_from(const RunConfig& cfg) {
  TrainerConfig t;
  t.margin = cfg.margin;
  t.negatives_per_positive = cfg.negatives;
  t.epochs = cfg.epochs;
  t.batch_size = cfg.batch_size;
  t.learning_rate = cfg.learning_rate;
  t.dropout_p = cfg.dropout;
  t.seed = cfg.seed;
  return t;
}

struct TrainOutcome {
  Checkpoint best;
  double best_mrr = 0.0;
};

// Up to cfg.epochs passes; the returned checkpoint holds the parameters of
// the epoch with the best validation MRR (epoch 0 = untouched init).
TrainOutcome run_training(const RunConfig& cfg, const EmbeddingTable& table,
                          const std::vector<std::string>& vocab,
                          const std::vector<TrainingPair>& train_pairs,
                          const std::vector<TrainingPair>& val_pairs) {
  EncoderConfig enc = encoder_config_from(cfg, table.dim());
  TrainerConfig tcfg = trainer_config_from(cfg);
  Model model = make_model(enc, table, cfg.seed);
  std::string snapshot = serialize_run_config(cfg);

  auto validate = [&] {
    CandidateCache cache = encode_candidates(model, vocab);
    return mean_rr(model, val_pairs, cache, cfg.topk);
  };

  double mrr = validate();
  TrainOutcome out;
  out.best = checkpoint_from_model(model, cfg.seed, snapshot, mrr, 0);
  out.best_mrr = mrr;
  std::printf("epoch %3u  loss        -  val_mrr %.4f\n", 0u, mrr);
  for (std::size_t e = 1; e <= cfg.epochs; ++e) {
    EpochStats stats = train_epoch(model, train_pairs, vocab, tcfg);
    mrr = validate();
    std::printf("epoch %3zu  loss %.6f  val_mrr %.4f\n", e, stats.mean_loss, mrr);
    if (stats.pairs_dropped > 0) {
      std::fprintf(stderr, "warning: %zu unrepresentable pairs dropped\n", stats.pairs_dropped);
    }
    if (mrr > out.best_mrr) {
      out.best = checkpoint_from_model(model, cfg.seed, snapshot, mrr,
                                       static_cast<std::uint32_t>(e));
      out.best_mrr = mrr;
    } else {
      out.best.epochs_trained = static_cast<std::uint32_t>(model.epochs_trained);
    }
  }
  return out;
}

}  // namespace

int cmd_train(const RunConfig& cfg) {
  EmbeddingTable table = load_table(cfg, std::nullopt);
  std::vector<std::string> vocab = load_vocab(cfg.vocab);
  std::unordered_set<std::string> vocab_set(vocab.begin(), vocab.end());

  auto data_in = open_or_throw(cfg.data, "training data");
  std::vector<TrainingPair> pairs = load_training_pairs(data_in);
  if (pairs.empty()) throw ParseError("training data '" + cfg.data + "' is empty");
  for (const auto& pair : pairs) {
    for (const auto& gold : pair.gold) {
      if (!vocab_set.count(gold)) {
        throw ParseError("gold hypernym '" + gold + "' of term '" + pair.term +
                         "' is not in the candidate vocabulary");
      }
    }
  }

  // 90/10 train/validation split by seeded shuffle.
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(cfg.seed, kSplitSalt));
  for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[split_rng.index(i + 1)]);
  std::size_t val_count = pairs.size() / 10;
  std::vector<TrainingPair> train_pairs, val_pairs;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < order.size() - val_count ? train_pairs : val_pairs).push_back(pairs[order[i]]);
  }
  std::printf("pairs: %zu train, %zu validation; vocabulary: %zu candidates\n",
              train_pairs.size(), val_pairs.size(), vocab.size());

  TrainOutcome best;
  if (cfg.grid) {
    // Grid over learning rate x dropout (x single filter width for the CNN).
    std::vector<std::vector<std::size_t>> width_grid = {cfg.cnn_widths};
    if (cfg.encoder == "cnn") width_grid = {{2}, {3}, {4}};
    bool first = true;
    for (double lr : {1e-3, 1e-2}) {
      for (double drop : {0.1, 0.2}) {
        for (const auto& widths : width_grid) {
          RunConfig combo = cfg;
          combo.learning_rate = lr;
          combo.dropout = drop;
          combo.cnn_widths = widths;
          std::printf("grid: lr=%g dropout=%g", lr, drop);
          if (cfg.encoder == "cnn") std::printf(" width=%zu", widths.front());
          std::printf("\n");
          TrainOutcome outcome = run_training(combo, table, vocab, train_pairs, val_pairs);
          if (first || outcome.best_mrr > best.best_mrr) {
            best = std::move(outcome);
            first = false;
          }
        }
      }
    }
    std::printf("grid best val_mrr %.4f\n", best.best_mrr);
  } else {
    best = run_training(cfg, table, vocab, train_pairs, val_pairs);
  }

  if (cfg.out.empty()) throw std::invalid_argument("missing --out path for the checkpoint");
  save_checkpoint(cfg.out, best.best);
  std::printf("best val_mrr %.4f at epoch %u; checkpoint written to %s\n", best.best_mrr,
              best.best.best_epoch, cfg.out.c_str());
  return 0;
}

int cmd_rank(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw std::invalid_argument("missing --checkpoint path");
  Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
  RunConfig snapshot = parse_run_config(ckpt.run_config_text);

  RunConfig embed_cfg = cfg;
  if (embed_cfg.embeddings.empty()) embed_cfg.embeddings = snapshot.embeddings;
  if (embed_cfg.embedding_kind.empty()) embed_cfg.embedding_kind = snapshot.embedding_kind;
  EmbeddingTable table = load_table(embed_cfg, ckpt.encoder.input_dim);
  Model model = model_from_checkpoint(ckpt, table);

  std::vector<std::string> vocab = load_vocab(cfg.vocab);
  auto terms_in = open_or_throw(cfg.terms, "terms");
  std::vector<std::string> terms;
  std::string line;
  while (std::getline(terms_in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) terms.push_back(line);
  }

  CandidateCache cache = encode_candidates(model, vocab);
  std::vector<RankedList> lists;
  lists.reserve(terms.size());
  std::size_t unrepresentable = 0;
  for (const auto& term : terms) {
    try {
      lists.push_back(rank_candidates(model, term, cache, cfg.topk));
    } catch (const NumericError&) {
      lists.push_back(RankedList{term, {}, cache.skipped});
      ++unrepresentable;
    }
  }

  if (cfg.out.empty()) throw std::invalid_argument("missing --out path for predictions");
  std::ofstream out(cfg.out, std::ios::trunc);
  if (!out) throw ParseError("cannot write predictions '" + cfg.out + "'");
  write_predictions(out, lists);
  if (unrepresentable > 0) {
    std::fprintf(stderr, "warning: %zu queries were unrepresentable\n", unrepresentable);
  }
  if (cache.skipped > 0) {
    std::fprintf(stderr, "warning: %zu candidates skipped\n", cache.skipped);
  }
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  auto gold_in = open_or_throw(cfg.gold, "gold");
  GoldStandard gold = load_gold(gold_in);
  auto pred_in = open_or_throw(cfg.predictions, "predictions");
  auto predictions = load_predictions(pred_in);
  EvalReport report = evaluate(predictions, gold);  // fixed cutoff 15
  std::fputs(format_report(report).c_str(), stdout);
  return 0;
}

int cmd_gradcheck(bool corrupt) {
  constexpr double kTol = 1e-4;
  bool all_ok = true;
  for (EncoderKind kind : {EncoderKind::Tea, EncoderKind::Gru, EncoderKind::Lstm,
                           EncoderKind::Cnn, EncoderKind::Rcnn}) {
    GradCheckSetup setup;
    double err = check_encoder_gradients(kind, setup, corrupt);
    bool ok = err < kTol;
    all_ok = all_ok && ok;
    std::printf("%-5s max rel err %.3e  %s\n", std::string(encoder_name(kind)).c_str(), err,
                ok ? "[ok]" : "[FAIL]");
  }
  return all_ok ? 0 : 2;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"hyrank: neural hypernym ranking"};
  app.require_subcommand(1);

  RunConfig cfg;
  // Blank until resolved: flags and config files win, and rank falls back
  // to the checkpoint snapshot, then to "word".
  cfg.embedding_kind.clear();
  bool corrupt = false;

  // --config seeds the run configuration before the flags are parsed, so
  // explicit flags always win. Keys are the RunConfig field names; unknown
  // keys are errors.
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    std::string path;
    if (arg == "--config" && i + 1 < argc) {
      path = argv[i + 1];
    } else if (arg.rfind("--config=", 0) == 0) {
      path = arg.substr(9);
    } else {
      continue;
    }
    try {
      std::ifstream in(path);
      if (!in) throw ParseError("cannot open config '" + path + "'");
      std::ostringstream text;
      text << in.rdbuf();
      apply_run_config(text.str(), cfg);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
    break;
  }

  std::string config_path;
  auto add_embedding_opts = [&cfg](CLI::App* cmd) {
    cmd->add_option("--embeddings", cfg.embeddings, "embedding file (text format)");
    cmd->add_option("--embedding-kind", cfg.embedding_kind, "word|sense")
        ->check(CLI::IsMember({"word", "sense"}));
  };
  auto add_config_opt = [&config_path](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value config file; flags override it");
  };

  CLI::App* train = app.add_subcommand("train", "train a model and save the best checkpoint");
  add_config_opt(train);
  add_embedding_opts(train);
  train->add_option("--data", cfg.data, "training pairs (term TAB hypernyms...)");
  train->add_option("--vocab", cfg.vocab, "candidate vocabulary, one per line");
  train->add_option("--encoder", cfg.encoder, "tea|gru|lstm|cnn|rcnn")
      ->check(CLI::IsMember({"tea", "gru", "lstm", "cnn", "rcnn"}));
  train->add_option("--hidden", cfg.hidden_dim, "hidden dimension");
  train->add_option("--cnn-widths", cfg.cnn_widths, "CNN filter widths")->delimiter(',');
  train->add_option("--rcnn-order", cfg.rcnn_order, "RCNN accumulator levels");
  train->add_option("--lr", cfg.learning_rate, "AdaGrad learning rate");
  train->add_option("--dropout", cfg.dropout, "input dropout probability");
  train->add_option("--margin", cfg.margin, "hinge margin");
  train->add_option("--negatives", cfg.negatives, "negatives per positive");
  train->add_option("--epochs", cfg.epochs, "training epochs");
  train->add_option("--batch-size", cfg.batch_size, "pairs per AdaGrad step");
  train->add_option("--seed", cfg.seed, "RNG seed");
  train->add_option("--out", cfg.out, "checkpoint output path");
  train->add_flag("--grid", cfg.grid, "search lr x dropout (x CNN width) and keep the best");

  CLI::App* rank = app.add_subcommand("rank", "rank candidates for each query term");
  add_config_opt(rank);
  rank->add_option("--checkpoint", cfg.checkpoint, "trained model checkpoint");
  rank->add_option("--terms", cfg.terms, "query terms, one per line");
  rank->add_option("--vocab", cfg.vocab, "candidate vocabulary, one per line");
  add_embedding_opts(rank);
  rank->add_option("--topk", cfg.topk, "candidates per query");
  rank->add_option("--out", cfg.out, "prediction output path");

  CLI::App* evaluate = app.add_subcommand("evaluate", "score predictions against a gold file");
  add_config_opt(evaluate);
  evaluate->add_option("--predictions", cfg.predictions, "prediction file from rank");
  evaluate->add_option("--gold", cfg.gold, "gold file (term TAB hypernyms...)");

  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "verify encoder gradients by finite differences");
  gradcheck->add_flag("--corrupt", corrupt,
                      "perturb one analytic gradient; the check must then fail");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (cfg.embedding_kind.empty() && !rank->parsed()) cfg.embedding_kind = "word";

  try {
    if (train->parsed()) return cmd_train(cfg);
    if (rank->parsed()) return cmd_rank(cfg);
    if (evaluate->parsed()) return cmd_evaluate(cfg);
    if (gradcheck->parsed()) return cmd_gradcheck(corrupt);
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}

}  // namespace hyrank
