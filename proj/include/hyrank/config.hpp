#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hyrank {

/// Everything a run needs: file paths, encoder choice and dimensions,
/// trainer settings. Populated from command-line flags (optionally seeded
/// from a key=value config file) and snapshotted into checkpoints.
struct RunConfig {
  // Inputs
  std::string embeddings;
  std::string embedding_kind = "word";  // word | sense
  std::string data;                     // training pairs
  std::string vocab;                    // candidate vocabulary, one per line
  std::string terms;                    // queries to rank, one per line
  std::string gold;                     // gold standard for evaluation
  std::string predictions;              // predictions to evaluate
  std::string checkpoint;               // model to load for ranking
  std::string out;                      // checkpoint or prediction output path

  // Encoder
  std::string encoder = "gru";
  std::size_t hidden_dim = 200;
  std::vector<std::size_t> cnn_widths = {3};
  std::size_t rcnn_order = 2;

  // Trainer
  double learning_rate = 1e-2;
  double dropout = 0.1;
  double margin = 0.1;
  std::size_t negatives = 10;
  std::size_t epochs = 50;
  std::size_t batch_size = 20;
  std::size_t topk = 15;
  std::uint64_t seed = 42;
  bool grid = false;
};

/// Key=value lines in a fixed order; exact for doubles.
std::string serialize_run_config(const RunConfig& cfg);

/// Inverse of serialize_run_config. Unknown keys are ParseErrors.
RunConfig parse_run_config(const std::string& text);

/// Applies only the keys present in `text` onto an existing config.
void apply_run_config(const std::string& text, RunConfig& cfg);

}  // namespace hyrank
