#include "hyrank/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>

namespace hyrank {

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
}

std::span<const double> EmbeddingTable::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return {};
  return {values_.data() + it->second * dim_, dim_};
}

void EmbeddingTable::insert(const std::string& token, std::span<const double> vec) {
  if (token.empty()) throw std::invalid_argument("empty token");
  if (vec.size() != dim_) throw std::invalid_argument("vector length does not match table dim");
  auto it = index_.find(token);
  if (it != index_.end()) {
    std::copy(vec.begin(), vec.end(), values_.begin() + it->second * dim_);
    return;
  }
  index_.emplace(token, tokens_.size());
  tokens_.push_back(token);
  values_.insert(values_.end(), vec.begin(), vec.end());
}

std::size_t TermSequence::non_oov_count() const {
  std::size_t n = 0;
  for (auto m : oov_mask) n += (m == 0);
  return n;
}

namespace {

// Splits a line into whitespace-separated fields (spaces and tabs; a
// trailing '\r' from CRLF files is dropped).
std::vector<std::string_view> split_fields(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("bad number '" + std::string(s) + "'", line_no);
  }
  return v;
}

struct RawLine {
  std::string token;
  Vec vec;
  std::size_t line_no;
};

// Common line-level parsing for both loaders. Enforces a constant float
// count across lines.
template <typename Fn>
std::size_t for_each_embedding_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  std::size_t data_lines = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty()) continue;  // blank line
    if (fields.size() < 2) throw ParseError("expected token plus at least one value", line_no);
    std::size_t this_dim = fields.size() - 1;
    if (dim == 0) {
      dim = this_dim;
    } else if (this_dim != dim) {
      throw ParseError("expected " + std::to_string(dim) + " values, found " +
                           std::to_string(this_dim),
                       line_no);
    }
    RawLine raw;
    raw.token = std::string(fields[0]);
    raw.line_no = line_no;
    raw.vec.reserve(dim);
    for (std::size_t i = 1; i < fields.size(); ++i) raw.vec.push_back(parse_double(fields[i], line_no));
    fn(std::move(raw));
    ++data_lines;
  }
  if (data_lines == 0) throw ParseError("no embeddings");
  return dim;
}

// "bank#3" → ("bank", true). A missing or non-numeric suffix means the
// token is its own single sense.
std::pair<std::string, bool> split_sense(const std::string& token, std::size_t line_no) {
  auto pos = token.rfind('#');
  if (pos == std::string::npos) return {token, false};
  std::string_view id = std::string_view(token).substr(pos + 1);
  bool numeric = !id.empty() && std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isdigit(c) != 0;
  });
  if (!numeric) return {token, false};
  if (pos == 0) throw ParseError("empty base word in sense token '" + token + "'", line_no);
  return {token.substr(0, pos), true};
}

}  // namespace

EmbeddingTable load_word_embeddings(std::istream& in, std::optional<std::size_t> expected_dim) {
  std::vector<RawLine> rows;
  std::size_t dim = for_each_embedding_line(in, [&](RawLine raw) { rows.push_back(std::move(raw)); });
  if (expected_dim && dim != *expected_dim) {
    throw ParseError("embedding dimension " + std::to_string(dim) + " does not match expected " +
                     std::to_string(*expected_dim));
  }
  EmbeddingTable table(dim);
  for (const auto& row : rows) table.insert(row.token, row.vec);
  return table;
}

EmbeddingTable load_sense_embeddings(std::istream& in) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::pair<Vec, std::size_t>> sums;  // word → (sum, count)
  std::size_t dim = for_each_embedding_line(in, [&](RawLine raw) {
    auto [base, had_id] = split_sense(raw.token, raw.line_no);
    (void)had_id;
    auto it = sums.find(base);
    if (it == sums.end()) {
      order.push_back(base);
      sums.emplace(base, std::make_pair(std::move(raw.vec), std::size_t{1}));
    } else {
      auto& [sum, count] = it->second;
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += raw.vec[i];
      ++count;
    }
  });
  EmbeddingTable table(dim);
  for (const auto& word : order) {
    auto& [sum, count] = sums.at(word);
    for (double& v : sum) v /= static_cast<double>(count);
    table.insert(word, sum);
  }
  return table;
}

void write_word_embeddings(std::ostream& out, const EmbeddingTable& table) {
  char buf[40];
  for (const auto& token : table.tokens()) {
    out << token;
    for (double v : table.find(token)) {
      std::snprintf(buf, sizeof(buf), " %.17g", v);
      out << buf;
    }
    out << '\n';
  }
}

TermSequence lookup_term(const EmbeddingTable& table, const std::string& term) {
  // Lowercase, then treat whitespace and underscores as token breaks.
  std::string norm = term;
  std::transform(norm.begin(), norm.end(), norm.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  TermSequence seq;
  std::size_t i = 0;
  auto is_break = [](char c) { return c == ' ' || c == '\t' || c == '_' || c == '\r' || c == '\n'; };
  while (i < norm.size()) {
    while (i < norm.size() && is_break(norm[i])) ++i;
    std::size_t start = i;
    while (i < norm.size() && !is_break(norm[i])) ++i;
    if (i > start) seq.tokens.push_back(norm.substr(start, i - start));
  }
  if (seq.tokens.empty()) throw ParseError("empty term");

  bool any_known = false;
  for (const auto& token : seq.tokens) {
    auto vec = table.find(token);
    if (vec.empty()) {
      seq.vectors.emplace_back(table.dim(), 0.0);
      seq.oov_mask.push_back(1);
    } else {
      seq.vectors.emplace_back(vec.begin(), vec.end());
      seq.oov_mask.push_back(0);
      any_known = true;
    }
  }
  if (!any_known) throw NumericError("unrepresentable term '" + term + "': all tokens OOV");
  return seq;
}

}  // namespace hyrank
