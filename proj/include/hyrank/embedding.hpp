#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hyrank/common.hpp"

namespace hyrank {

/// Immutable token → vector map of fixed dimension. Built by the loaders
/// below, then shared read-only; nothing mutates it after load, so
/// concurrent lookups are safe.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }

  bool contains(const std::string& token) const { return index_.count(token) != 0; }

  /// Vector for `token`, or an empty span when out of vocabulary.
  std::span<const double> find(const std::string& token) const;

  /// Insert or overwrite. Insertion order is preserved for serialization.
  void insert(const std::string& token, std::span<const double> vec);

  /// Tokens in insertion order.
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::size_t dim_;
  std::vector<std::string> tokens_;
  std::vector<double> values_;  // row-major, one row per token
  std::unordered_map<std::string, std::size_t> index_;
};

/// One term's token vectors: w = {x_1 .. x_l}, l >= 1. Out-of-vocabulary
/// tokens hold the zero vector and are flagged in oov_mask.
struct TermSequence {
  std::vector<std::string> tokens;
  std::vector<Vec> vectors;
  std::vector<std::uint8_t> oov_mask;

  std::size_t length() const { return tokens.size(); }
  std::size_t non_oov_count() const;
};

/// Reads the plain text embedding format: one line per token,
/// "token v1 v2 ... vd", fields separated by runs of spaces or tabs.
/// The dimension is taken from the first line and every later line must
/// match it (and `expected_dim` when given). Duplicate tokens: last wins.
/// Throws ParseError on an empty stream, width mismatch or bad number.
EmbeddingTable load_word_embeddings(std::istream& in,
                                    std::optional<std::size_t> expected_dim = std::nullopt);

/// Reads sense vectors ("bank#0", "bank#1", ...) in the same line format
/// and collapses them: one entry per base word holding the arithmetic mean
/// of its sense vectors. A token without a '#<digits>' suffix counts as its
/// own single sense.
EmbeddingTable load_sense_embeddings(std::istream& in);

/// Writes the text format back out, insertion order, "%.17g" floats, so a
/// load/write cycle reproduces the file.
void write_word_embeddings(std::ostream& out, const EmbeddingTable& table);

/// Lowercases `term`, splits on whitespace and underscores, and maps each
/// token to its vector. OOV tokens get the zero vector with oov_mask set.
/// Throws NumericError("unrepresentable term ...") when every token is OOV
/// and ParseError when the term is empty after trimming.
TermSequence lookup_term(const EmbeddingTable& table, const std::string& term);

}  // namespace hyrank
