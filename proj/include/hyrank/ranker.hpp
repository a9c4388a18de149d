#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hyrank/model.hpp"
#include "hyrank/rng.hpp"

namespace hyrank {

/// A query term with its gold hypernyms (unique, all drawn from the
/// candidate vocabulary, never containing the term itself).
struct TrainingPair {
  std::string term;
  std::vector<std::string> gold;
};

struct TrainerConfig {
  double margin = 0.1;
  std::size_t negatives_per_positive = 10;
  std::size_t epochs = 50;
  std::size_t batch_size = 20;
  double learning_rate = 1e-2;
  double adagrad_epsilon = 1e-6;
  double dropout_p = 0.1;
  std::uint64_t seed = 42;
};

struct EpochStats {
  double mean_loss = 0.0;         // over all scored (pair, gold, negative) triples
  std::size_t violations = 0;     // triples with a positive hinge
  std::size_t triples = 0;
  std::size_t pairs_dropped = 0;  // unrepresentable term or no representable gold
  std::size_t negatives_skipped = 0;
};

/// Top-k candidates for one query, strictly ordered by (score desc,
/// candidate asc), query excluded.
struct RankedList {
  std::string query;
  std::vector<std::pair<std::string, double>> items;
  std::size_t candidates_skipped = 0;
};

/// Standard cosine similarity x·y / (|x||y|). Throws NumericError on a
/// zero-norm argument.
double cosine(const Vec& x, const Vec& y);

/// Accumulates d(dcos * cosine(x, y)) into dx and dy.
void cosine_backward(const Vec& x, const Vec& y, double dcos, Vec& dx, Vec& dy);

/// Siamese score: query and candidate go through the same encoder, then
/// cosine. No dropout.
double score(const Model& model, const std::string& term, const std::string& candidate);

/// max{0, margin + s_neg - s_pos}; zero exactly when the margin is
/// satisfied. Callers pass margin 0 when the sampled negative equals the
/// positive.
double hinge_loss(double s_pos, double s_neg, double margin);

/// k uniform draws with replacement from vocab minus the gold set and the
/// query term. Throws std::invalid_argument when that set is empty.
std::vector<std::string> sample_negatives(Rng& rng, const std::vector<std::string>& vocab,
                                          const std::unordered_set<std::string>& gold,
                                          const std::string& query, std::size_t k);

/// Hinge loss of one (term, positive, negative) triple with full
/// backpropagation through both cosine branches into the shared encoder
/// parameters. Optional outputs receive the input-vector gradients of each
/// sequence. Used directly by the gradient-check harness.
double triple_loss_and_grad(const EncoderConfig& config, EncoderParams& params,
                            const TermSequence& term, const TermSequence& pos,
                            const TermSequence& neg, double margin,
                            std::vector<Vec>* d_term = nullptr, std::vector<Vec>* d_pos = nullptr,
                            std::vector<Vec>* d_neg = nullptr);

/// One pass over `data`: shuffles with an epoch-specific stream derived
/// from (cfg.seed, model.epochs_trained), walks pairs, samples
/// cfg.negatives_per_positive negatives per gold hypernym, accumulates
/// hinge gradients through both siamese branches, and applies an AdaGrad
/// step after every batch_size pairs (and once more for a partial final
/// batch). Dropout hits the token vectors at the encoder inputs only.
/// Gradients within a batch are summed over triples.
EpochStats train_epoch(Model& model, const std::vector<TrainingPair>& data,
                       const std::vector<std::string>& vocab, const TrainerConfig& cfg);

/// Candidate encodings for a fixed model, shared across queries. Entries
/// that cannot be represented or encode to a zero-norm vector are skipped
/// and counted.
struct CandidateCache {
  std::vector<std::string> names;
  std::vector<Vec> encodings;
  std::vector<std::uint8_t> usable;
  std::size_t skipped = 0;
};

CandidateCache encode_candidates(const Model& model, const std::vector<std::string>& vocab);

RankedList rank_candidates(const Model& model, const std::string& term,
                           const CandidateCache& cache, std::size_t topk = 15);
RankedList rank_candidates(const Model& model, const std::string& term,
                           const std::vector<std::string>& vocab, std::size_t topk = 15);

/// Mean reciprocal rank of the gold hypernyms over `pairs`, cutoff 15, in
/// [0, 1]. Unrepresentable terms count as zero.
double mean_rr(const Model& model, const std::vector<TrainingPair>& pairs,
               const CandidateCache& cache, std::size_t cutoff = 15);

/// Training-pair file: one line per pair, query term then its gold
/// hypernyms, tab-separated (same shape as the gold file).
std::vector<TrainingPair> load_training_pairs(std::istream& in);

/// Prediction file: one line per query, the query term followed by up to
/// topk candidates in rank order, tab-separated. A query with no usable
/// prediction keeps its line with an empty candidate list.
void write_predictions(std::ostream& out, std::span<const RankedList> lists);
std::unordered_map<std::string, std::vector<std::string>> load_predictions(std::istream& in);

}  // namespace hyrank
