#include "hyrank/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "hyrank/kernels.hpp"
#include "hyrank/metrics.hpp"
#include "hyrank/tensor.hpp"

namespace hyrank {

namespace {

const kernels::Ops& ops() { return kernels::active(); }

double norm2(const Vec& v) { return std::sqrt(ops().dot(v.data(), v.data(), v.size())); }

bool all_zero(const Vec& v) {
  for (double x : v) {
    if (x != 0.0) return false;
  }
  return true;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::string_view view = line;
  if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (start <= view.size()) {
    std::size_t end = view.find('\t', start);
    if (end == std::string_view::npos) end = view.size();
    fields.emplace_back(view.substr(start, end - start));
    start = end + 1;
  }
  return fields;
}

}  // namespace

double cosine(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double nx = norm2(x);
  double ny = norm2(y);
  if (nx == 0.0 || ny == 0.0) throw NumericError("cosine of a zero-norm vector");
  return ops().dot(x.data(), y.data(), x.size()) / (nx * ny);
}

void cosine_backward(const Vec& x, const Vec& y, double dcos, Vec& dx, Vec& dy) {
  double nx = norm2(x);
  double ny = norm2(y);
  if (nx == 0.0 || ny == 0.0) throw NumericError("cosine of a zero-norm vector");
  double s = ops().dot(x.data(), y.data(), x.size());
  double inv = 1.0 / (nx * ny);
  double c = s * inv;
  // d cos/dx = y/(|x||y|) - cos * x/|x|^2
  ops().axpy(x.size(), dcos * inv, y.data(), dx.data());
  ops().axpy(x.size(), -dcos * c / (nx * nx), x.data(), dx.data());
  ops().axpy(y.size(), dcos * inv, x.data(), dy.data());
  ops().axpy(y.size(), -dcos * c / (ny * ny), y.data(), dy.data());
}

double score(const Model& model, const std::string& term, const std::string& candidate) {
  TermSequence t = lookup_term(*model.table, term);
  TermSequence c = lookup_term(*model.table, candidate);
  return cosine(encode(model.config, model.params, t), encode(model.config, model.params, c));
}

double hinge_loss(double s_pos, double s_neg, double margin) {
  return std::max(0.0, margin + s_neg - s_pos);
}

std::vector<std::string> sample_negatives(Rng& rng, const std::vector<std::string>& vocab,
                                          const std::unordered_set<std::string>& gold,
                                          const std::string& query, std::size_t k) {
  auto excluded = [&](const std::string& cand) { return cand == query || gold.count(cand) != 0; };
  bool feasible = std::any_of(vocab.begin(), vocab.end(),
                              [&](const std::string& c) { return !excluded(c); });
  if (!feasible) throw std::invalid_argument("no candidates left to sample negatives from");
  std::vector<std::string> out;
  out.reserve(k);
  while (out.size() < k) {
    const std::string& pick = vocab[rng.index(vocab.size())];
    if (!excluded(pick)) out.push_back(pick);
  }
  return out;
}

double triple_loss_and_grad(const EncoderConfig& config, EncoderParams& params,
                            const TermSequence& term, const TermSequence& pos,
                            const TermSequence& neg, double margin, std::vector<Vec>* d_term,
                            std::vector<Vec>* d_pos, std::vector<Vec>* d_neg) {
  EncoderCache term_cache, pos_cache, neg_cache;
  Vec term_enc = encode_cached(config, params, term, term_cache);
  Vec pos_enc = encode_cached(config, params, pos, pos_cache);
  Vec neg_enc = encode_cached(config, params, neg, neg_cache);
  double s_pos = cosine(term_enc, pos_enc);
  double s_neg = cosine(term_enc, neg_enc);
  double loss = hinge_loss(s_pos, s_neg, margin);

  auto zero_like = [](const TermSequence& seq) {
    return std::vector<Vec>(seq.length(), Vec(seq.vectors.front().size(), 0.0));
  };
  if (loss > 0.0) {
    Vec d_term_enc(term_enc.size(), 0.0);
    Vec d_pos_enc(pos_enc.size(), 0.0);
    Vec d_neg_enc(neg_enc.size(), 0.0);
    cosine_backward(term_enc, neg_enc, 1.0, d_term_enc, d_neg_enc);
    cosine_backward(term_enc, pos_enc, -1.0, d_term_enc, d_pos_enc);
    // Same accumulation order as train_epoch: negative, positive, term.
    auto dn = encoder_backward(config, params, neg, neg_cache, d_neg_enc);
    auto dp = encoder_backward(config, params, pos, pos_cache, d_pos_enc);
    auto dt = encoder_backward(config, params, term, term_cache, d_term_enc);
    if (d_term) *d_term = std::move(dt);
    if (d_pos) *d_pos = std::move(dp);
    if (d_neg) *d_neg = std::move(dn);
  } else {
    if (d_term) *d_term = zero_like(term);
    if (d_pos) *d_pos = zero_like(pos);
    if (d_neg) *d_neg = zero_like(neg);
  }
  return loss;
}

namespace {

// Dropout on every token vector at the encoder input. OOV rows are zero
// already but still consume mask draws so the stream stays aligned.
void dropout_sequence(TermSequence& seq, double p, Rng& rng) {
  for (auto& vec : seq.vectors) vec = dropout(vec, p, rng, true);
}

}  // namespace

EpochStats train_epoch(Model& model, const std::vector<TrainingPair>& data,
                       const std::vector<std::string>& vocab, const TrainerConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("no training pairs");
  if (vocab.empty()) throw std::invalid_argument("empty candidate vocabulary");
  Rng rng(derive_seed(cfg.seed, model.epochs_trained));
  OptimizerConfig opt{cfg.learning_rate, cfg.adagrad_epsilon};
  auto tensors = param_tensors(model.params);
  auto step_all = [&] {
    for (ParamTensor* t : tensors) adagrad_step(*t, opt);
  };

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i-- > 1;) {
    std::swap(order[i], order[rng.index(i + 1)]);
  }

  EpochStats stats;
  double loss_sum = 0.0;
  std::size_t in_batch = 0;
  for (std::size_t idx : order) {
    const TrainingPair& pair = data[idx];
    TermSequence term_seq;
    try {
      term_seq = lookup_term(*model.table, pair.term);
    } catch (const NumericError&) {
      ++stats.pairs_dropped;
      continue;
    }
    dropout_sequence(term_seq, cfg.dropout_p, rng);
    EncoderCache term_cache;
    Vec term_enc = encode_cached(model.config, model.params, term_seq, term_cache);
    Vec d_term_enc(term_enc.size(), 0.0);

    std::unordered_set<std::string> gold_set(pair.gold.begin(), pair.gold.end());
    std::size_t usable_golds = 0;
    for (const std::string& gold : pair.gold) {
      TermSequence gold_seq;
      try {
        gold_seq = lookup_term(*model.table, gold);
      } catch (const NumericError&) {
        continue;
      }
      ++usable_golds;
      dropout_sequence(gold_seq, cfg.dropout_p, rng);
      EncoderCache gold_cache;
      Vec gold_enc = encode_cached(model.config, model.params, gold_seq, gold_cache);
      Vec d_gold_enc(gold_enc.size(), 0.0);
      double s_pos = cosine(term_enc, gold_enc);

      auto negatives =
          sample_negatives(rng, vocab, gold_set, pair.term, cfg.negatives_per_positive);
      for (const std::string& neg : negatives) {
        TermSequence neg_seq;
        try {
          neg_seq = lookup_term(*model.table, neg);
        } catch (const NumericError&) {
          ++stats.negatives_skipped;
          continue;
        }
        dropout_sequence(neg_seq, cfg.dropout_p, rng);
        EncoderCache neg_cache;
        Vec neg_enc = encode_cached(model.config, model.params, neg_seq, neg_cache);
        double margin = (neg == gold) ? 0.0 : cfg.margin;
        double loss = hinge_loss(s_pos, cosine(term_enc, neg_enc), margin);
        ++stats.triples;
        loss_sum += loss;
        if (loss > 0.0) {
          ++stats.violations;
          Vec d_neg_enc(neg_enc.size(), 0.0);
          cosine_backward(term_enc, neg_enc, 1.0, d_term_enc, d_neg_enc);
          cosine_backward(term_enc, gold_enc, -1.0, d_term_enc, d_gold_enc);
          encoder_backward(model.config, model.params, neg_seq, neg_cache, d_neg_enc);
        }
      }
      if (!all_zero(d_gold_enc)) {
        encoder_backward(model.config, model.params, gold_seq, gold_cache, d_gold_enc);
      }
    }
    if (usable_golds == 0) {
      ++stats.pairs_dropped;
      continue;
    }
    if (!all_zero(d_term_enc)) {
      encoder_backward(model.config, model.params, term_seq, term_cache, d_term_enc);
    }
    if (++in_batch == cfg.batch_size) {
      step_all();
      in_batch = 0;
    }
  }
  if (in_batch > 0) step_all();
  model.epochs_trained += 1;
  stats.mean_loss = stats.triples ? loss_sum / static_cast<double>(stats.triples) : 0.0;
  return stats;
}

CandidateCache encode_candidates(const Model& model, const std::vector<std::string>& vocab) {
  CandidateCache cache;
  cache.names = vocab;
  cache.encodings.resize(vocab.size());
  cache.usable.assign(vocab.size(), 0);
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (!seen.insert(vocab[i]).second) continue;  // ranked lists carry no duplicates
    try {
      TermSequence seq = lookup_term(*model.table, vocab[i]);
      Vec enc = encode(model.config, model.params, seq);
      if (all_zero(enc)) {
        ++cache.skipped;
        continue;
      }
      cache.encodings[i] = std::move(enc);
      cache.usable[i] = 1;
    } catch (const NumericError&) {
      ++cache.skipped;
    } catch (const ParseError&) {
      ++cache.skipped;
    }
  }
  return cache;
}

RankedList rank_candidates(const Model& model, const std::string& term,
                           const CandidateCache& cache, std::size_t topk) {
  if (topk == 0) throw std::invalid_argument("topk must be >= 1");
  TermSequence seq = lookup_term(*model.table, term);
  Vec term_enc = encode(model.config, model.params, seq);
  if (all_zero(term_enc)) throw NumericError("term '" + term + "' encodes to a zero vector");

  RankedList out;
  out.query = term;
  out.candidates_skipped = cache.skipped;
  out.items.reserve(cache.names.size());
  for (std::size_t i = 0; i < cache.names.size(); ++i) {
    if (!cache.usable[i] || cache.names[i] == term) continue;
    out.items.emplace_back(cache.names[i], cosine(term_enc, cache.encodings[i]));
  }
  std::sort(out.items.begin(), out.items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (out.items.size() > topk) out.items.resize(topk);
  return out;
}

RankedList rank_candidates(const Model& model, const std::string& term,
                           const std::vector<std::string>& vocab, std::size_t topk) {
  return rank_candidates(model, term, encode_candidates(model, vocab), topk);
}

double mean_rr(const Model& model, const std::vector<TrainingPair>& pairs,
               const CandidateCache& cache, std::size_t cutoff) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& pair : pairs) {
    double rr = 0.0;
    try {
      RankedList ranked = rank_candidates(model, pair.term, cache, cutoff);
      std::vector<std::string> names;
      names.reserve(ranked.items.size());
      for (const auto& [name, s] : ranked.items) names.push_back(name);
      std::unordered_set<std::string> gold(pair.gold.begin(), pair.gold.end());
      rr = reciprocal_rank(names, gold, cutoff);
    } catch (const NumericError&) {
      rr = 0.0;  // unrepresentable term counts as a miss
    }
    sum += rr;
  }
  return sum / static_cast<double>(pairs.size());
}

std::vector<TrainingPair> load_training_pairs(std::istream& in) {
  std::vector<TrainingPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_tabs(line);
    if (fields[0].empty()) throw ParseError("empty query term", line_no);
    if (fields.size() < 2) throw ParseError("pair '" + fields[0] + "' has no gold hypernyms", line_no);
    TrainingPair pair;
    pair.term = fields[0];
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (fields[i].empty()) throw ParseError("empty gold hypernym", line_no);
      if (fields[i] == pair.term) {
        throw ParseError("term '" + pair.term + "' listed as its own hypernym", line_no);
      }
      if (std::find(pair.gold.begin(), pair.gold.end(), fields[i]) == pair.gold.end()) {
        pair.gold.push_back(fields[i]);
      }
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

void write_predictions(std::ostream& out, std::span<const RankedList> lists) {
  for (const auto& list : lists) {
    out << list.query;
    for (const auto& [name, s] : list.items) out << '\t' << name;
    out << '\n';
  }
}

std::unordered_map<std::string, std::vector<std::string>> load_predictions(std::istream& in) {
  std::unordered_map<std::string, std::vector<std::string>> preds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_tabs(line);
    if (fields[0].empty()) throw ParseError("empty query term", line_no);
    if (preds.count(fields[0])) throw ParseError("duplicate query '" + fields[0] + "'", line_no);
    std::vector<std::string> cands;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (!fields[i].empty()) cands.push_back(fields[i]);
    }
    preds.emplace(fields[0], std::move(cands));
  }
  return preds;
}

}  // namespace hyrank
