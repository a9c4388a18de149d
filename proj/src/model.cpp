#include "hyrank/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace hyrank {

Model make_model(const EncoderConfig& config, const EmbeddingTable& table, std::uint64_t seed) {
  if (table.dim() != config.input_dim) {
    throw std::invalid_argument("embedding dimension " + std::to_string(table.dim()) +
                                " does not match encoder input_dim " +
                                std::to_string(config.input_dim));
  }
  Model m;
  m.config = config;
  m.params = init_encoder_params(config, seed);
  m.table = &table;
  return m;
}

namespace {

constexpr char kMagic[4] = {'H', 'Y', 'R', 'K'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_str(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ParseError("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

std::string get_str(std::istream& in) {
  std::uint64_t n = get_u64(in);
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw ParseError("truncated checkpoint");
  }
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write checkpoint '" + path + "'");
  out.write(kMagic, 4);
  put_u32(out, ckpt.version);
  put_u64(out, ckpt.seed);
  put_u32(out, static_cast<std::uint32_t>(ckpt.encoder.kind));
  put_u64(out, ckpt.encoder.input_dim);
  put_u64(out, ckpt.encoder.hidden_dim);
  put_u32(out, static_cast<std::uint32_t>(ckpt.encoder.cnn_filter_widths.size()));
  for (std::size_t w : ckpt.encoder.cnn_filter_widths) put_u64(out, w);
  put_u64(out, ckpt.encoder.rcnn_order);
  put_u32(out, ckpt.epochs_trained);
  put_u32(out, ckpt.best_epoch);
  put_f64(out, ckpt.best_val_mrr);
  put_str(out, ckpt.run_config_text);
  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    put_str(out, t.name);
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) put_u64(out, d);
    for (double v : t.values) put_f64(out, v);
  }
  if (!out) throw ParseError("write failed for checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint '" + path + "'");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("'" + path + "' is not a checkpoint file");
  }
  Checkpoint ckpt;
  ckpt.version = get_u32(in);
  if (ckpt.version != 1) {
    throw ParseError("unsupported checkpoint version " + std::to_string(ckpt.version));
  }
  ckpt.seed = get_u64(in);
  std::uint32_t kind = get_u32(in);
  if (kind > static_cast<std::uint32_t>(EncoderKind::Rcnn)) {
    throw ParseError("unknown encoder kind in checkpoint");
  }
  ckpt.encoder.kind = static_cast<EncoderKind>(kind);
  ckpt.encoder.input_dim = get_u64(in);
  ckpt.encoder.hidden_dim = get_u64(in);
  ckpt.encoder.cnn_filter_widths.clear();
  for (std::uint32_t i = 0, n = get_u32(in); i < n; ++i) {
    ckpt.encoder.cnn_filter_widths.push_back(get_u64(in));
  }
  ckpt.encoder.rcnn_order = get_u64(in);
  ckpt.epochs_trained = get_u32(in);
  ckpt.best_epoch = get_u32(in);
  ckpt.best_val_mrr = get_f64(in);
  ckpt.run_config_text = get_str(in);
  std::uint32_t count = get_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    ParamTensor t;
    t.name = get_str(in);
    std::uint32_t ndim = get_u32(in);
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      t.shape.push_back(get_u64(in));
      n *= t.shape.back();
    }
    t.values.resize(n);
    for (double& v : t.values) v = get_f64(in);
    t.grad.assign(n, 0.0);
    t.adagrad_acc.assign(n, 0.0);
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

Model model_from_checkpoint(const Checkpoint& ckpt, const EmbeddingTable& table) {
  Model m = make_model(ckpt.encoder, table, ckpt.seed);
  auto live = param_tensors(m.params);
  if (live.size() != ckpt.tensors.size()) {
    throw ParseError("checkpoint tensor count does not match encoder config");
  }
  for (std::size_t i = 0; i < live.size(); ++i) {
    const ParamTensor& stored = ckpt.tensors[i];
    if (stored.name != live[i]->name || stored.shape != live[i]->shape) {
      throw ParseError("checkpoint tensor '" + stored.name + "' does not match expected '" +
                       live[i]->name + "'");
    }
    live[i]->values = stored.values;
    live[i]->zero_grad();
    std::fill(live[i]->adagrad_acc.begin(), live[i]->adagrad_acc.end(), 0.0);
  }
  m.epochs_trained = ckpt.epochs_trained;
  return m;
}

Checkpoint checkpoint_from_model(const Model& model, std::uint64_t seed,
                                 std::string run_config_text, double best_val_mrr,
                                 std::uint32_t best_epoch) {
  Checkpoint ckpt;
  ckpt.seed = seed;
  ckpt.encoder = model.config;
  ckpt.run_config_text = std::move(run_config_text);
  ckpt.best_val_mrr = best_val_mrr;
  ckpt.best_epoch = best_epoch;
  ckpt.epochs_trained = static_cast<std::uint32_t>(model.epochs_trained);
  for (const ParamTensor* t : param_tensors(model.params)) ckpt.tensors.push_back(*t);
  return ckpt;
}

}  // namespace hyrank
