#pragma once

#include <cstdint>
#include <string>

#include "hyrank/embedding.hpp"
#include "hyrank/encoders.hpp"

namespace hyrank {

/// An encoder with its trained parameters, bound to the embedding table it
/// was built against. The table is borrowed and must outlive the model.
struct Model {
  EncoderConfig config;
  EncoderParams params;
  const EmbeddingTable* table = nullptr;
  std::size_t epochs_trained = 0;
};

Model make_model(const EncoderConfig& config, const EmbeddingTable& table, std::uint64_t seed);

/// On-disk model container. Versioned binary, explicit little-endian
/// fields; doubles are stored as raw 64-bit patterns so save → load →
/// save reproduces a file byte for byte.
struct Checkpoint {
  std::uint32_t version = 1;
  std::uint64_t seed = 0;
  EncoderConfig encoder;
  std::string run_config_text;  // snapshot of the run settings, key=value lines
  double best_val_mrr = 0.0;
  std::uint32_t best_epoch = 0;
  std::uint32_t epochs_trained = 0;
  std::vector<ParamTensor> tensors;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

/// Throws ParseError on a missing file, bad magic, unsupported version or
/// truncated data.
Checkpoint load_checkpoint(const std::string& path);

/// Rebuilds a runnable model; tensor names and shapes must match what the
/// encoder config implies, and the table dimension must equal input_dim.
Model model_from_checkpoint(const Checkpoint& ckpt, const EmbeddingTable& table);

/// Snapshot of a model's current parameters with the given run metadata.
Checkpoint checkpoint_from_model(const Model& model, std::uint64_t seed,
                                 std::string run_config_text, double best_val_mrr,
                                 std::uint32_t best_epoch);

}  // namespace hyrank
