#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "hyrank/embedding.hpp"
#include "hyrank/tensor.hpp"

namespace hyrank {

// Five interchangeable term encoders mapping a TermSequence to a fixed
// vector: embedding averaging (TEA), GRU, LSTM, a wide-convolution CNN
// with one-max pooling, and a gated-decay recurrent CNN (RCNN). Forward
// passes are pure; backward passes accumulate into ParamTensor::grad and
// need exclusive access to the parameter set.

enum class EncoderKind { Tea, Gru, Lstm, Cnn, Rcnn };

std::string_view encoder_name(EncoderKind kind);
std::optional<EncoderKind> parse_encoder_kind(std::string_view name);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::Gru;
  std::size_t input_dim = 300;
  std::size_t hidden_dim = 200;
  /// CNN filter widths; hidden_dim channels are split evenly across them.
  std::vector<std::size_t> cnn_filter_widths = {3};
  /// Number of RCNN accumulator levels (1-gram .. n-gram features).
  std::size_t rcnn_order = 2;

  /// TEA passes the embedding dimension through; the others emit hidden_dim.
  std::size_t output_dim() const {
    return kind == EncoderKind::Tea ? input_dim : hidden_dim;
  }
  void validate() const;  // throws std::invalid_argument
};

// --- Parameters -----------------------------------------------------------

struct TeaParams {};  // averaging has nothing to train

struct GruParams {
  ParamTensor w_r, u_r, b_r;  // reset gate
  ParamTensor w_z, u_z, b_z;  // update gate
  ParamTensor w_h, u_h, b_h;  // candidate state
};

struct LstmParams {
  ParamTensor w_i, u_i, b_i;  // input gate
  ParamTensor w_f, u_f, b_f;  // forget gate
  ParamTensor w_u, u_u, b_u;  // output gate
  ParamTensor w_c, u_c, b_c;  // cell candidate
};

struct CnnParams {
  std::vector<std::size_t> widths;
  std::size_t maps_per_width = 0;
  std::vector<ParamTensor> filters;  // one per width, shape {maps, width, input_dim}
  std::vector<ParamTensor> biases;   // one per width, shape {maps}
};

struct RcnnParams {
  ParamTensor w_gate, u_gate, b_gate;  // decay gate lambda
  std::vector<ParamTensor> w_level;    // one input matrix per accumulator level
  ParamTensor b_out;                   // bias inside the output tanh
};

using EncoderParams = std::variant<TeaParams, GruParams, LstmParams, CnnParams, RcnnParams>;

/// Fresh parameters for the configured encoder: Xavier-uniform matrices,
/// zero biases, per-tensor streams derived from `seed`.
EncoderParams init_encoder_params(const EncoderConfig& config, std::uint64_t seed);

std::vector<ParamTensor*> param_tensors(EncoderParams& params);
std::vector<const ParamTensor*> param_tensors(const EncoderParams& params);

// --- Forward --------------------------------------------------------------

// Per-step activations kept for the backward passes. Index 0 of h/c holds
// the zero initial state.
struct TeaCache {};
struct GruCache {
  std::vector<Vec> h, r, z, hc;
};
struct LstmCache {
  std::vector<Vec> h, c, i, f, u, g, tc;  // tc = tanh(c_t)
};
struct CnnCache {
  struct PerWidth {
    std::vector<std::size_t> argmax;  // pooled position per channel
    Vec pooled;                       // tanh value at that position
    Vec gap;                          // pooled minus the runner-up value
  };
  std::vector<PerWidth> per_width;
};
struct RcnnCache {
  std::vector<Vec> h, lam;
  std::vector<std::vector<Vec>> c;   // c[t][level], c[0] = zeros
  std::vector<std::vector<Vec>> wx;  // wx[t-1][level] = W_level * x_t
};

using EncoderCache = std::variant<std::monostate, TeaCache, GruCache, LstmCache, CnnCache, RcnnCache>;

/// Mean of the non-OOV token vectors.
Vec encode_tea(const TermSequence& seq);

/// One GRU step: r and z are sigmoid gates, the candidate state is
/// tanh-squashed, h_t = (1-z) ⊙ h_prev + z ⊙ candidate.
Vec gru_step(const GruParams& p, const Vec& x, const Vec& h_prev);

/// One LSTM step; returns (h_t, c_t). Gates i, f, u are sigmoids, the cell
/// accumulates f ⊙ c_prev + i ⊙ tanh(candidate), h_t = tanh(c_t) ⊙ u.
std::pair<Vec, Vec> lstm_step(const LstmParams& p, const Vec& x, const Vec& h_prev,
                              const Vec& c_prev);

Vec encode_gru(const GruParams& p, const TermSequence& seq, GruCache* cache = nullptr);
Vec encode_lstm(const LstmParams& p, const TermSequence& seq, LstmCache* cache = nullptr);

/// Wide convolution (zero padding of width-1 rows each side, so every
/// filter position overlaps the sequence), tanh, one-max pooling over
/// time per channel, channels concatenated across filter widths.
Vec encode_cnn(const CnnParams& p, const TermSequence& seq, CnnCache* cache = nullptr);

/// Gated-decay accumulators: level m at time t blends its previous value
/// with the previous value of level m-1 plus W_m x_t, weighted by the
/// sigmoid gate lambda_t; the output is tanh(top level + bias).
Vec encode_rcnn(const RcnnParams& p, const TermSequence& seq, RcnnCache* cache = nullptr);

/// Dispatch on config.kind. Pure; safe to call concurrently on shared
/// immutable params.
Vec encode(const EncoderConfig& config, const EncoderParams& params, const TermSequence& seq);

/// Forward pass that records the intermediates encoder_backward needs.
Vec encode_cached(const EncoderConfig& config, const EncoderParams& params,
                  const TermSequence& seq, EncoderCache& cache);

/// Backpropagates d(upstream · output) through the encoder: parameter
/// gradients accumulate into params, the per-token input gradients are
/// returned. `seq` and `cache` must come from the matching encode_cached
/// call.
std::vector<Vec> encoder_backward(const EncoderConfig& config, EncoderParams& params,
                                  const TermSequence& seq, const EncoderCache& cache,
                                  const Vec& upstream);

}  // namespace hyrank
