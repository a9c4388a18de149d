#include "hyrank/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <stdexcept>

namespace hyrank {

namespace {

void require_gold(const std::unordered_set<std::string>& gold) {
  if (gold.empty()) throw std::invalid_argument("empty gold set");
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

double average_precision(std::span<const std::string> ranked,
                         const std::unordered_set<std::string>& gold, std::size_t cutoff) {
  require_gold(gold);
  std::size_t depth = std::min(ranked.size(), cutoff);
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < depth; ++r) {
    if (gold.count(ranked[r])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(std::min(gold.size(), cutoff));
}

double reciprocal_rank(std::span<const std::string> ranked,
                       const std::unordered_set<std::string>& gold, std::size_t cutoff) {
  require_gold(gold);
  std::size_t depth = std::min(ranked.size(), cutoff);
  for (std::size_t r = 0; r < depth; ++r) {
    if (gold.count(ranked[r])) return 1.0 / static_cast<double>(r + 1);
  }
  return 0.0;
}

double precision_at_k(std::span<const std::string> ranked,
                      const std::unordered_set<std::string>& gold, std::size_t k) {
  require_gold(gold);
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  std::size_t depth = std::min(ranked.size(), k);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < depth; ++r) hits += gold.count(ranked[r]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

EvalReport evaluate(const std::unordered_map<std::string, std::vector<std::string>>& predictions,
                    const GoldStandard& gold, std::size_t cutoff) {
  EvalReport rep;
  double map = 0.0, mrr = 0.0, p1 = 0.0, p3 = 0.0, p5 = 0.0, p15 = 0.0;
  for (const auto& query : gold.queries) {
    const auto& gold_set = gold.gold.at(query);
    auto it = predictions.find(query);
    if (it == predictions.end()) {
      ++rep.queries_skipped;
      continue;  // contributes zeros
    }
    ++rep.queries_evaluated;
    std::span<const std::string> ranked = it->second;
    map += average_precision(ranked, gold_set, cutoff);
    mrr += reciprocal_rank(ranked, gold_set, cutoff);
    p1 += precision_at_k(ranked, gold_set, 1);
    p3 += precision_at_k(ranked, gold_set, 3);
    p5 += precision_at_k(ranked, gold_set, 5);
    p15 += precision_at_k(ranked, gold_set, 15);
  }
  double n = static_cast<double>(gold.queries.size());
  if (n > 0) {
    rep.map = 100.0 * map / n;
    rep.mrr = 100.0 * mrr / n;
    rep.p1 = 100.0 * p1 / n;
    rep.p3 = 100.0 * p3 / n;
    rep.p5 = 100.0 * p5 / n;
    rep.p15 = 100.0 * p15 / n;
  }
  return rep;
}

GoldStandard load_gold(std::istream& in) {
  GoldStandard gs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_tabs(line);
    if (fields[0].empty()) throw ParseError("empty query term", line_no);
    if (fields.size() < 2) throw ParseError("query '" + fields[0] + "' has no gold hypernyms", line_no);
    if (gs.gold.count(fields[0])) throw ParseError("duplicate query '" + fields[0] + "'", line_no);
    std::unordered_set<std::string> golds;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (fields[i].empty()) throw ParseError("empty gold hypernym", line_no);
      golds.insert(fields[i]);
    }
    gs.queries.push_back(fields[0]);
    gs.gold.emplace(fields[0], std::move(golds));
  }
  return gs;
}

std::string format_report(const EvalReport& report) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%8s%8s%8s%8s%8s%8s\n", "MAP", "MRR", "P@1", "P@3", "P@5",
                "P@15");
  out += buf;
  std::snprintf(buf, sizeof(buf), "%8.2f%8.2f%8.2f%8.2f%8.2f%8.2f\n", report.map, report.mrr,
                report.p1, report.p3, report.p5, report.p15);
  out += buf;
  std::snprintf(buf, sizeof(buf), "queries evaluated: %zu  skipped: %zu\n",
                report.queries_evaluated, report.queries_skipped);
  out += buf;
  return out;
}

}  // namespace hyrank
