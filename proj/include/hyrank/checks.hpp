#pragma once

#include <cstdint>

#include "hyrank/encoders.hpp"

namespace hyrank {

/// Toy-scale setup for end-to-end gradient verification of one encoder
/// through the full scoring path (three encodings, two cosines, hinge).
struct GradCheckSetup {
  std::uint64_t seed = 7;
  std::size_t input_dim = 3;
  std::size_t hidden_dim = 4;
  std::vector<std::size_t> cnn_widths = {1, 2};
  std::size_t rcnn_order = 2;
  std::size_t term_len = 2;
  std::size_t pos_len = 1;
  std::size_t neg_len = 3;
  /// Margin large enough that the hinge is active and smooth for any
  /// cosine values.
  double margin = 2.5;
  double h = 1e-4;
};

/// Builds random inputs and parameters, backpropagates the hinge loss
/// analytically, and compares every parameter and input element against
/// central differences. Returns the max relative error.
///
/// One-max pooling is non-differentiable where two pool positions tie, so
/// for the CNN the inputs are re-sampled (seed+1, seed+2, ...) until every
/// channel's top-two gap clears a threshold; a genuine backward bug still
/// fails for every seed.
///
/// `corrupt` adds 0.1 to one analytic gradient element first, which any
/// healthy run must detect — a sensitivity check for the harness itself.
double check_encoder_gradients(EncoderKind kind, const GradCheckSetup& setup,
                               bool corrupt = false);

}  // namespace hyrank
