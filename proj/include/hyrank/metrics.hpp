#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hyrank/common.hpp"

namespace hyrank {

/// Query term → non-empty set of gold hypernyms. Queries are unique and
/// kept in file order for reporting.
struct GoldStandard {
  std::vector<std::string> queries;
  std::unordered_map<std::string, std::unordered_set<std::string>> gold;
};

/// Metric fields are percentages in [0, 100].
struct EvalReport {
  double map = 0.0, mrr = 0.0, p1 = 0.0, p3 = 0.0, p5 = 0.0, p15 = 0.0;
  std::size_t queries_evaluated = 0;
  std::size_t queries_skipped = 0;
};

// Per-query metrics in [0, 1]. `ranked` is a prediction list in rank order
// with no duplicates; positions past `cutoff` are ignored. All three throw
// std::invalid_argument on an empty gold set.

/// Sum of precision-at-hit over the top `cutoff`, normalized by
/// min(|gold|, cutoff).
double average_precision(std::span<const std::string> ranked,
                         const std::unordered_set<std::string>& gold, std::size_t cutoff = 15);

/// 1/rank of the first hit within the cutoff, 0 when there is none.
double reciprocal_rank(std::span<const std::string> ranked,
                       const std::unordered_set<std::string>& gold, std::size_t cutoff = 15);

/// Hits in the top k divided by k; a list shorter than k counts the
/// missing positions as misses.
double precision_at_k(std::span<const std::string> ranked,
                      const std::unordered_set<std::string>& gold, std::size_t k);

/// Averages AP, RR and P@{1,3,5,15} over every gold query (×100). Queries
/// without a prediction list contribute zeros and are counted as skipped.
EvalReport evaluate(const std::unordered_map<std::string, std::vector<std::string>>& predictions,
                    const GoldStandard& gold, std::size_t cutoff = 15);

/// Parses the gold file: one line per query, query term then its gold
/// hypernyms, tab-separated. Duplicate queries and empty gold sets are
/// ParseErrors naming the line.
GoldStandard load_gold(std::istream& in);

/// Two-decimal fixed-width table in the column order
/// MAP MRR P@1 P@3 P@5 P@15, plus the query counts.
std::string format_report(const EvalReport& report);

}  // namespace hyrank
