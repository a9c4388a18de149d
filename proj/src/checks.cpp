#include "hyrank/checks.hpp"

#include <algorithm>

#include "hyrank/gradcheck.hpp"
#include "hyrank/ranker.hpp"
#include "hyrank/rng.hpp"

namespace hyrank {

namespace {

TermSequence random_sequence(Rng& rng, std::size_t len, std::size_t dim) {
  TermSequence seq;
  for (std::size_t t = 0; t < len; ++t) {
    seq.tokens.push_back("w" + std::to_string(t));
    Vec v(dim);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    seq.vectors.push_back(std::move(v));
    seq.oov_mask.push_back(0);
  }
  return seq;
}

// Inputs live in ParamTensors so grad_check can wiggle them; the sequences
// are rebuilt from the tensor values before every forward pass.
ParamTensor sequence_tensor(const std::string& name, const TermSequence& seq) {
  ParamTensor p;
  p.name = name;
  p.shape = {seq.length(), seq.vectors.front().size()};
  for (const Vec& v : seq.vectors) p.values.insert(p.values.end(), v.begin(), v.end());
  p.grad.assign(p.values.size(), 0.0);
  p.adagrad_acc.assign(p.values.size(), 0.0);
  return p;
}

void refresh_sequence(TermSequence& seq, const ParamTensor& p) {
  std::size_t dim = seq.vectors.front().size();
  for (std::size_t t = 0; t < seq.length(); ++t) {
    std::copy(p.values.begin() + t * dim, p.values.begin() + (t + 1) * dim,
              seq.vectors[t].begin());
  }
}

void write_input_grads(ParamTensor& p, const std::vector<Vec>& dx) {
  std::size_t dim = dx.front().size();
  for (std::size_t t = 0; t < dx.size(); ++t) {
    std::copy(dx[t].begin(), dx[t].end(), p.grad.begin() + t * dim);
  }
}

double min_pool_gap(const EncoderCache& cache) {
  const auto& cnn = std::get<CnnCache>(cache);
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& pw : cnn.per_width) {
    for (double g : pw.gap) gap = std::min(gap, g);
  }
  return gap;
}

}  // namespace

double check_encoder_gradients(EncoderKind kind, const GradCheckSetup& setup, bool corrupt) {
  EncoderConfig config;
  config.kind = kind;
  config.input_dim = setup.input_dim;
  config.hidden_dim = setup.hidden_dim;
  config.cnn_filter_widths = setup.cnn_widths;
  config.rcnn_order = setup.rcnn_order;
  config.validate();

  // Pool ties make the CNN loss non-differentiable; walk the seed forward
  // until the pooled maxima are isolated.
  constexpr double kMinGap = 1e-2;
  std::uint64_t seed = setup.seed;
  for (int attempt = 0; attempt < 64; ++attempt, ++seed) {
    Rng rng(derive_seed(seed, 0xC3ECull));
    TermSequence term = random_sequence(rng, setup.term_len, setup.input_dim);
    TermSequence pos = random_sequence(rng, setup.pos_len, setup.input_dim);
    TermSequence neg = random_sequence(rng, setup.neg_len, setup.input_dim);
    EncoderParams params = init_encoder_params(config, derive_seed(seed, 0xBEEFull));

    if (kind == EncoderKind::Cnn) {
      double gap = std::numeric_limits<double>::infinity();
      for (const TermSequence* seq : {&term, &pos, &neg}) {
        EncoderCache cache;
        encode_cached(config, params, *seq, cache);
        gap = std::min(gap, min_pool_gap(cache));
      }
      if (gap < kMinGap) continue;
    }

    ParamTensor term_in = sequence_tensor("input.term", term);
    ParamTensor pos_in = sequence_tensor("input.pos", pos);
    ParamTensor neg_in = sequence_tensor("input.neg", neg);

    std::vector<Vec> d_term, d_pos, d_neg;
    triple_loss_and_grad(config, params, term, pos, neg, setup.margin, &d_term, &d_pos, &d_neg);
    write_input_grads(term_in, d_term);
    write_input_grads(pos_in, d_pos);
    write_input_grads(neg_in, d_neg);

    std::vector<ParamTensor*> checked = param_tensors(params);
    checked.push_back(&term_in);
    checked.push_back(&pos_in);
    checked.push_back(&neg_in);
    if (corrupt) checked.front()->grad.front() += 0.1;

    auto loss_fn = [&]() {
      refresh_sequence(term, term_in);
      refresh_sequence(pos, pos_in);
      refresh_sequence(neg, neg_in);
      double s_pos = cosine(encode(config, params, term), encode(config, params, pos));
      double s_neg = cosine(encode(config, params, term), encode(config, params, neg));
      return hinge_loss(s_pos, s_neg, setup.margin);
    };
    return grad_check(loss_fn, checked, setup.h);
  }
  throw NumericError("could not find a tie-free CNN configuration");
}

}  // namespace hyrank
