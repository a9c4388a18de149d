#include "hyrank/config.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "hyrank/common.hpp"

namespace hyrank {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_widths(const std::vector<std::size_t>& widths) {
  std::string out;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(widths[i]);
  }
  return out;
}

std::uint64_t parse_u64(const std::string& s, const std::string& key) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("bad integer '" + s + "' for key '" + key + "'");
  }
  return v;
}

double parse_f64(const std::string& s, const std::string& key) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("bad number '" + s + "' for key '" + key + "'");
  }
  return v;
}

std::vector<std::size_t> parse_widths(const std::string& s, const std::string& key) {
  std::vector<std::size_t> out;
  std::string item;
  std::stringstream ss(s);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_u64(item, key));
  }
  if (out.empty()) throw ParseError("no widths in '" + s + "' for key '" + key + "'");
  return out;
}

}  // namespace

std::string serialize_run_config(const RunConfig& cfg) {
  std::string out;
  auto kv = [&out](const std::string& key, const std::string& value) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  kv("embeddings", cfg.embeddings);
  kv("embedding_kind", cfg.embedding_kind);
  kv("data", cfg.data);
  kv("vocab", cfg.vocab);
  kv("encoder", cfg.encoder);
  kv("hidden_dim", std::to_string(cfg.hidden_dim));
  kv("cnn_widths", fmt_widths(cfg.cnn_widths));
  kv("rcnn_order", std::to_string(cfg.rcnn_order));
  kv("learning_rate", fmt_double(cfg.learning_rate));
  kv("dropout", fmt_double(cfg.dropout));
  kv("margin", fmt_double(cfg.margin));
  kv("negatives", std::to_string(cfg.negatives));
  kv("epochs", std::to_string(cfg.epochs));
  kv("batch_size", std::to_string(cfg.batch_size));
  kv("topk", std::to_string(cfg.topk));
  kv("seed", std::to_string(cfg.seed));
  return out;
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  apply_run_config(text, cfg);
  return cfg;
}

void apply_run_config(const std::string& text, RunConfig& cfg) {
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    if (key == "embeddings") cfg.embeddings = value;
    else if (key == "embedding_kind") cfg.embedding_kind = value;
    else if (key == "data") cfg.data = value;
    else if (key == "vocab") cfg.vocab = value;
    else if (key == "terms") cfg.terms = value;
    else if (key == "gold") cfg.gold = value;
    else if (key == "predictions") cfg.predictions = value;
    else if (key == "checkpoint") cfg.checkpoint = value;
    else if (key == "out") cfg.out = value;
    else if (key == "encoder") cfg.encoder = value;
    else if (key == "hidden_dim") cfg.hidden_dim = parse_u64(value, key);
    else if (key == "cnn_widths") cfg.cnn_widths = parse_widths(value, key);
    else if (key == "rcnn_order") cfg.rcnn_order = parse_u64(value, key);
    else if (key == "learning_rate") cfg.learning_rate = parse_f64(value, key);
    else if (key == "dropout") cfg.dropout = parse_f64(value, key);
    else if (key == "margin") cfg.margin = parse_f64(value, key);
    else if (key == "negatives") cfg.negatives = parse_u64(value, key);
    else if (key == "epochs") cfg.epochs = parse_u64(value, key);
    else if (key == "batch_size") cfg.batch_size = parse_u64(value, key);
    else if (key == "topk") cfg.topk = parse_u64(value, key);
    else if (key == "seed") cfg.seed = parse_u64(value, key);
    else throw ParseError("unknown key '" + key + "'", line_no);
  }
}

}  // namespace hyrank
