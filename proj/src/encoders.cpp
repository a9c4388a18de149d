#include "hyrank/encoders.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "hyrank/kernels.hpp"

namespace hyrank {

namespace {

const kernels::Ops& ops() { return kernels::active(); }

void sigmoid_inplace(Vec& v) {
  for (double& x : v) x = 1.0 / (1.0 + std::exp(-x));
}

void tanh_inplace(Vec& v) {
  for (double& x : v) x = std::tanh(x);
}

/// b + W x + U h
Vec affine(const ParamTensor& w, const Vec& x, const ParamTensor& u, const Vec& h,
           const ParamTensor& b) {
  Vec out = b.values;
  ops().gemv(w.rows(), w.cols(), w.values.data(), x.data(), out.data());
  ops().gemv(u.rows(), u.cols(), u.values.data(), h.data(), out.data());
  return out;
}

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// Gradient accumulation shorthand.
void acc_outer(ParamTensor& w, const Vec& dout, const Vec& x) {
  ops().ger(dout.size(), x.size(), 1.0, dout.data(), x.data(), w.grad.data());
}
void acc_bias(ParamTensor& b, const Vec& d) { ops().axpy(d.size(), 1.0, d.data(), b.grad.data()); }
void acc_transposed(const ParamTensor& w, const Vec& d, Vec& dx) {
  ops().gemv_t(w.rows(), w.cols(), w.values.data(), d.data(), dx.data());
}

double sigmoid_grad(double s) { return s * (1.0 - s); }
double tanh_grad(double t) { return 1.0 - t * t; }

}  // namespace

std::string_view encoder_name(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::Tea: return "tea";
    case EncoderKind::Gru: return "gru";
    case EncoderKind::Lstm: return "lstm";
    case EncoderKind::Cnn: return "cnn";
    case EncoderKind::Rcnn: return "rcnn";
  }
  return "?";
}

std::optional<EncoderKind> parse_encoder_kind(std::string_view name) {
  if (name == "tea") return EncoderKind::Tea;
  if (name == "gru") return EncoderKind::Gru;
  if (name == "lstm") return EncoderKind::Lstm;
  if (name == "cnn") return EncoderKind::Cnn;
  if (name == "rcnn") return EncoderKind::Rcnn;
  return std::nullopt;
}

void EncoderConfig::validate() const {
  require(input_dim > 0, "input_dim must be positive");
  require(hidden_dim > 0, "hidden_dim must be positive");
  if (kind == EncoderKind::Cnn) {
    require(!cnn_filter_widths.empty(), "CNN needs at least one filter width");
    for (std::size_t w : cnn_filter_widths) require(w >= 1, "CNN filter width must be >= 1");
    require(hidden_dim % cnn_filter_widths.size() == 0,
            "hidden_dim must be divisible by the number of CNN filter widths");
  }
  if (kind == EncoderKind::Rcnn) require(rcnn_order >= 1, "rcnn_order must be >= 1");
}

// --- Parameter construction -----------------------------------------------

EncoderParams init_encoder_params(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  Rng master(seed);
  auto next = [&master] { return master.next_u64(); };
  std::size_t in = config.input_dim;
  std::size_t hid = config.hidden_dim;
  auto mat = [&](const char* name, std::size_t rows, std::size_t cols) {
    return init_params(name, {rows, cols}, next(), InitScheme::XavierUniform);
  };
  auto bias = [&](const char* name, std::size_t n) {
    return init_params(name, {n}, next(), InitScheme::Zeros);
  };

  switch (config.kind) {
    case EncoderKind::Tea:
      return TeaParams{};
    case EncoderKind::Gru: {
      GruParams p;
      p.w_r = mat("gru.w_r", hid, in);
      p.u_r = mat("gru.u_r", hid, hid);
      p.b_r = bias("gru.b_r", hid);
      p.w_z = mat("gru.w_z", hid, in);
      p.u_z = mat("gru.u_z", hid, hid);
      p.b_z = bias("gru.b_z", hid);
      p.w_h = mat("gru.w_h", hid, in);
      p.u_h = mat("gru.u_h", hid, hid);
      p.b_h = bias("gru.b_h", hid);
      return p;
    }
    case EncoderKind::Lstm: {
      LstmParams p;
      p.w_i = mat("lstm.w_i", hid, in);
      p.u_i = mat("lstm.u_i", hid, hid);
      p.b_i = bias("lstm.b_i", hid);
      p.w_f = mat("lstm.w_f", hid, in);
      p.u_f = mat("lstm.u_f", hid, hid);
      p.b_f = bias("lstm.b_f", hid);
      p.w_u = mat("lstm.w_u", hid, in);
      p.u_u = mat("lstm.u_u", hid, hid);
      p.b_u = bias("lstm.b_u", hid);
      p.w_c = mat("lstm.w_c", hid, in);
      p.u_c = mat("lstm.u_c", hid, hid);
      p.b_c = bias("lstm.b_c", hid);
      return p;
    }
    case EncoderKind::Cnn: {
      CnnParams p;
      p.widths = config.cnn_filter_widths;
      p.maps_per_width = hid / p.widths.size();
      for (std::size_t j = 0; j < p.widths.size(); ++j) {
        std::string tag = "cnn.w" + std::to_string(p.widths[j]);
        p.filters.push_back(init_params(tag + ".filter", {p.maps_per_width, p.widths[j], in},
                                        next(), InitScheme::XavierUniform));
        p.biases.push_back(init_params(tag + ".bias", {p.maps_per_width}, next(), InitScheme::Zeros));
      }
      return p;
    }
    case EncoderKind::Rcnn: {
      RcnnParams p;
      p.w_gate = mat("rcnn.w_gate", hid, in);
      p.u_gate = mat("rcnn.u_gate", hid, hid);
      p.b_gate = bias("rcnn.b_gate", hid);
      for (std::size_t m = 0; m < config.rcnn_order; ++m) {
        p.w_level.push_back(mat(("rcnn.w" + std::to_string(m + 1)).c_str(), hid, in));
      }
      p.b_out = bias("rcnn.b_out", hid);
      return p;
    }
  }
  throw std::invalid_argument("unknown encoder kind");
}

std::vector<ParamTensor*> param_tensors(EncoderParams& params) {
  std::vector<ParamTensor*> out;
  std::visit(
      [&out](auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GruParams>) {
          out = {&p.w_r, &p.u_r, &p.b_r, &p.w_z, &p.u_z, &p.b_z, &p.w_h, &p.u_h, &p.b_h};
        } else if constexpr (std::is_same_v<T, LstmParams>) {
          out = {&p.w_i, &p.u_i, &p.b_i, &p.w_f, &p.u_f, &p.b_f,
                 &p.w_u, &p.u_u, &p.b_u, &p.w_c, &p.u_c, &p.b_c};
        } else if constexpr (std::is_same_v<T, CnnParams>) {
          for (std::size_t j = 0; j < p.filters.size(); ++j) {
            out.push_back(&p.filters[j]);
            out.push_back(&p.biases[j]);
          }
        } else if constexpr (std::is_same_v<T, RcnnParams>) {
          out = {&p.w_gate, &p.u_gate, &p.b_gate};
          for (auto& w : p.w_level) out.push_back(&w);
          out.push_back(&p.b_out);
        }
      },
      params);
  return out;
}

std::vector<const ParamTensor*> param_tensors(const EncoderParams& params) {
  auto mut = param_tensors(const_cast<EncoderParams&>(params));
  return {mut.begin(), mut.end()};
}

// --- TEA --------------------------------------------------------------------

Vec encode_tea(const TermSequence& seq) {
  require(seq.length() >= 1, "empty sequence");
  std::size_t n = seq.non_oov_count();
  if (n == 0) throw NumericError("all tokens OOV, nothing to average");
  Vec out(seq.vectors.front().size(), 0.0);
  for (std::size_t t = 0; t < seq.length(); ++t) {
    if (!seq.oov_mask[t]) ops().axpy(out.size(), 1.0, seq.vectors[t].data(), out.data());
  }
  ops().scale(out.size(), 1.0 / static_cast<double>(n), out.data());
  return out;
}

// --- GRU --------------------------------------------------------------------

namespace {

Vec gru_step_impl(const GruParams& p, const Vec& x, const Vec& h_prev, Vec* r_out, Vec* z_out,
                  Vec* hc_out) {
  require(x.size() == p.w_r.cols(), "GRU input dimension mismatch");
  require(h_prev.size() == p.u_r.cols(), "GRU hidden dimension mismatch");
  std::size_t hid = p.w_r.rows();
  Vec r = affine(p.w_r, x, p.u_r, h_prev, p.b_r);
  sigmoid_inplace(r);
  Vec z = affine(p.w_z, x, p.u_z, h_prev, p.b_z);
  sigmoid_inplace(z);
  Vec rh(hid);
  ops().hadamard(hid, r.data(), h_prev.data(), rh.data());
  Vec hc = affine(p.w_h, x, p.u_h, rh, p.b_h);
  tanh_inplace(hc);
  Vec h(hid);
  for (std::size_t i = 0; i < hid; ++i) h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * hc[i];
  if (r_out) *r_out = std::move(r);
  if (z_out) *z_out = std::move(z);
  if (hc_out) *hc_out = std::move(hc);
  return h;
}

}  // namespace

Vec gru_step(const GruParams& p, const Vec& x, const Vec& h_prev) {
  return gru_step_impl(p, x, h_prev, nullptr, nullptr, nullptr);
}

Vec encode_gru(const GruParams& p, const TermSequence& seq, GruCache* cache) {
  require(seq.length() >= 1, "empty sequence");
  Vec h(p.w_r.rows(), 0.0);
  if (cache) {
    *cache = GruCache{};
    cache->h.push_back(h);
  }
  for (std::size_t t = 0; t < seq.length(); ++t) {
    Vec r, z, hc;
    h = gru_step_impl(p, seq.vectors[t], h, cache ? &r : nullptr, cache ? &z : nullptr,
                      cache ? &hc : nullptr);
    if (cache) {
      cache->r.push_back(std::move(r));
      cache->z.push_back(std::move(z));
      cache->hc.push_back(std::move(hc));
      cache->h.push_back(h);
    }
  }
  return h;
}

namespace {

std::vector<Vec> gru_backward(GruParams& p, const TermSequence& seq, const GruCache& cache,
                              const Vec& upstream) {
  std::size_t l = seq.length();
  std::size_t hid = p.w_r.rows();
  std::vector<Vec> dx(l, Vec(p.w_r.cols(), 0.0));
  Vec dh = upstream;
  Vec dz(hid), dhc(hid), da_r(hid), da_z(hid), da_h(hid), drh(hid), rh(hid);
  for (std::size_t t = l; t-- > 0;) {
    const Vec& x = seq.vectors[t];
    const Vec& hp = cache.h[t];
    const Vec& r = cache.r[t];
    const Vec& z = cache.z[t];
    const Vec& hc = cache.hc[t];

    Vec dhp(hid);
    for (std::size_t i = 0; i < hid; ++i) {
      dz[i] = dh[i] * (hc[i] - hp[i]);
      dhc[i] = dh[i] * z[i];
      dhp[i] = dh[i] * (1.0 - z[i]);
      da_h[i] = dhc[i] * tanh_grad(hc[i]);
    }
    ops().hadamard(hid, r.data(), hp.data(), rh.data());
    acc_outer(p.w_h, da_h, x);
    acc_outer(p.u_h, da_h, rh);
    acc_bias(p.b_h, da_h);

    std::fill(drh.begin(), drh.end(), 0.0);
    acc_transposed(p.u_h, da_h, drh);
    for (std::size_t i = 0; i < hid; ++i) {
      double dr = drh[i] * hp[i];
      dhp[i] += drh[i] * r[i];
      da_r[i] = dr * sigmoid_grad(r[i]);
      da_z[i] = dz[i] * sigmoid_grad(z[i]);
    }
    acc_outer(p.w_r, da_r, x);
    acc_outer(p.u_r, da_r, hp);
    acc_bias(p.b_r, da_r);
    acc_outer(p.w_z, da_z, x);
    acc_outer(p.u_z, da_z, hp);
    acc_bias(p.b_z, da_z);

    acc_transposed(p.u_r, da_r, dhp);
    acc_transposed(p.u_z, da_z, dhp);
    acc_transposed(p.w_r, da_r, dx[t]);
    acc_transposed(p.w_z, da_z, dx[t]);
    acc_transposed(p.w_h, da_h, dx[t]);
    dh = std::move(dhp);
  }
  return dx;
}

}  // namespace

// --- LSTM -------------------------------------------------------------------

namespace {

struct LstmStep {
  Vec i, f, u, g, c, tc, h;
};

LstmStep lstm_step_impl(const LstmParams& p, const Vec& x, const Vec& h_prev, const Vec& c_prev) {
  require(x.size() == p.w_i.cols(), "LSTM input dimension mismatch");
  require(h_prev.size() == p.u_i.cols() && c_prev.size() == p.u_i.cols(),
          "LSTM hidden dimension mismatch");
  std::size_t hid = p.w_i.rows();
  LstmStep s;
  s.i = affine(p.w_i, x, p.u_i, h_prev, p.b_i);
  sigmoid_inplace(s.i);
  s.f = affine(p.w_f, x, p.u_f, h_prev, p.b_f);
  sigmoid_inplace(s.f);
  s.u = affine(p.w_u, x, p.u_u, h_prev, p.b_u);
  sigmoid_inplace(s.u);
  s.g = affine(p.w_c, x, p.u_c, h_prev, p.b_c);
  tanh_inplace(s.g);
  s.c.resize(hid);
  s.tc.resize(hid);
  s.h.resize(hid);
  for (std::size_t k = 0; k < hid; ++k) {
    s.c[k] = s.f[k] * c_prev[k] + s.i[k] * s.g[k];
    s.tc[k] = std::tanh(s.c[k]);
    s.h[k] = s.tc[k] * s.u[k];
  }
  return s;
}

}  // namespace

std::pair<Vec, Vec> lstm_step(const LstmParams& p, const Vec& x, const Vec& h_prev,
                              const Vec& c_prev) {
  LstmStep s = lstm_step_impl(p, x, h_prev, c_prev);
  return {std::move(s.h), std::move(s.c)};
}

Vec encode_lstm(const LstmParams& p, const TermSequence& seq, LstmCache* cache) {
  require(seq.length() >= 1, "empty sequence");
  std::size_t hid = p.w_i.rows();
  Vec h(hid, 0.0), c(hid, 0.0);
  if (cache) {
    *cache = LstmCache{};
    cache->h.push_back(h);
    cache->c.push_back(c);
  }
  for (std::size_t t = 0; t < seq.length(); ++t) {
    LstmStep s = lstm_step_impl(p, seq.vectors[t], h, c);
    h = s.h;
    c = s.c;
    if (cache) {
      cache->i.push_back(std::move(s.i));
      cache->f.push_back(std::move(s.f));
      cache->u.push_back(std::move(s.u));
      cache->g.push_back(std::move(s.g));
      cache->tc.push_back(std::move(s.tc));
      cache->h.push_back(h);
      cache->c.push_back(c);
    }
  }
  return h;
}

namespace {

std::vector<Vec> lstm_backward(LstmParams& p, const TermSequence& seq, const LstmCache& cache,
                               const Vec& upstream) {
  std::size_t l = seq.length();
  std::size_t hid = p.w_i.rows();
  std::vector<Vec> dx(l, Vec(p.w_i.cols(), 0.0));
  Vec dh = upstream;
  Vec dc(hid, 0.0);
  Vec da_i(hid), da_f(hid), da_u(hid), da_g(hid);
  for (std::size_t t = l; t-- > 0;) {
    const Vec& x = seq.vectors[t];
    const Vec& hp = cache.h[t];
    const Vec& cp = cache.c[t];
    const Vec& i = cache.i[t];
    const Vec& f = cache.f[t];
    const Vec& u = cache.u[t];
    const Vec& g = cache.g[t];
    const Vec& tc = cache.tc[t];

    Vec dcprev(hid);
    for (std::size_t k = 0; k < hid; ++k) {
      double du = dh[k] * tc[k];
      dc[k] += dh[k] * u[k] * tanh_grad(tc[k]);
      double df = dc[k] * cp[k];
      double di = dc[k] * g[k];
      double dg = dc[k] * i[k];
      dcprev[k] = dc[k] * f[k];
      da_i[k] = di * sigmoid_grad(i[k]);
      da_f[k] = df * sigmoid_grad(f[k]);
      da_u[k] = du * sigmoid_grad(u[k]);
      da_g[k] = dg * tanh_grad(g[k]);
    }
    acc_outer(p.w_i, da_i, x);
    acc_outer(p.u_i, da_i, hp);
    acc_bias(p.b_i, da_i);
    acc_outer(p.w_f, da_f, x);
    acc_outer(p.u_f, da_f, hp);
    acc_bias(p.b_f, da_f);
    acc_outer(p.w_u, da_u, x);
    acc_outer(p.u_u, da_u, hp);
    acc_bias(p.b_u, da_u);
    acc_outer(p.w_c, da_g, x);
    acc_outer(p.u_c, da_g, hp);
    acc_bias(p.b_c, da_g);

    Vec dhp(hid, 0.0);
    acc_transposed(p.u_i, da_i, dhp);
    acc_transposed(p.u_f, da_f, dhp);
    acc_transposed(p.u_u, da_u, dhp);
    acc_transposed(p.u_c, da_g, dhp);
    acc_transposed(p.w_i, da_i, dx[t]);
    acc_transposed(p.w_f, da_f, dx[t]);
    acc_transposed(p.w_u, da_u, dx[t]);
    acc_transposed(p.w_c, da_g, dx[t]);
    dh = std::move(dhp);
    dc = std::move(dcprev);
  }
  return dx;
}

}  // namespace

// --- CNN --------------------------------------------------------------------

Vec encode_cnn(const CnnParams& p, const TermSequence& seq, CnnCache* cache) {
  require(seq.length() >= 1, "empty sequence");
  std::size_t in = p.filters.front().shape[2];
  require(seq.vectors.front().size() == in, "CNN input dimension mismatch");
  std::size_t l = seq.length();
  Vec out;
  out.reserve(p.widths.size() * p.maps_per_width);
  if (cache) *cache = CnnCache{};

  for (std::size_t j = 0; j < p.widths.size(); ++j) {
    std::size_t w = p.widths[j];
    std::size_t pad = w - 1;
    std::size_t positions = l + w - 1;
    // Contiguous padded input: pad zero rows, the sequence, pad zero rows.
    Vec padded((l + 2 * pad) * in, 0.0);
    for (std::size_t t = 0; t < l; ++t) {
      std::copy(seq.vectors[t].begin(), seq.vectors[t].end(), padded.begin() + (pad + t) * in);
    }
    const ParamTensor& filt = p.filters[j];
    const ParamTensor& bias = p.biases[j];
    CnnCache::PerWidth pw;
    pw.argmax.resize(p.maps_per_width);
    pw.pooled.resize(p.maps_per_width);
    pw.gap.resize(p.maps_per_width);
    for (std::size_t m = 0; m < p.maps_per_width; ++m) {
      const double* wm = filt.values.data() + m * w * in;
      double best = -std::numeric_limits<double>::infinity();
      double second = -std::numeric_limits<double>::infinity();
      std::size_t best_pos = 0;
      for (std::size_t s = 0; s < positions; ++s) {
        double v = std::tanh(bias.values[m] + ops().dot(wm, padded.data() + s * in, w * in));
        if (v > best) {  // ties keep the earliest position
          second = best;
          best = v;
          best_pos = s;
        } else if (v > second) {
          second = v;
        }
      }
      pw.argmax[m] = best_pos;
      pw.pooled[m] = best;
      pw.gap[m] = positions > 1 ? best - second : std::numeric_limits<double>::infinity();
      out.push_back(best);
    }
    if (cache) cache->per_width.push_back(std::move(pw));
  }
  return out;
}

namespace {

std::vector<Vec> cnn_backward(CnnParams& p, const TermSequence& seq, const CnnCache& cache,
                              const Vec& upstream) {
  std::size_t in = p.filters.front().shape[2];
  std::size_t l = seq.length();
  std::vector<Vec> dx(l, Vec(in, 0.0));
  for (std::size_t j = 0; j < p.widths.size(); ++j) {
    std::size_t w = p.widths[j];
    std::size_t pad = w - 1;
    std::size_t offset = j * p.maps_per_width;
    ParamTensor& filt = p.filters[j];
    ParamTensor& bias = p.biases[j];
    const auto& pw = cache.per_width[j];
    for (std::size_t m = 0; m < p.maps_per_width; ++m) {
      double da = upstream[offset + m] * tanh_grad(pw.pooled[m]);
      if (da == 0.0) continue;
      bias.grad[m] += da;
      std::size_t pos = pw.argmax[m];
      for (std::size_t d = 0; d < w; ++d) {
        // Position of window row d in the unpadded sequence; pad rows are
        // zero and carry no gradient.
        std::ptrdiff_t q = static_cast<std::ptrdiff_t>(pos + d) - static_cast<std::ptrdiff_t>(pad);
        if (q < 0 || q >= static_cast<std::ptrdiff_t>(l)) continue;
        double* wgrad = filt.grad.data() + (m * w + d) * in;
        const double* wval = filt.values.data() + (m * w + d) * in;
        ops().axpy(in, da, seq.vectors[static_cast<std::size_t>(q)].data(), wgrad);
        ops().axpy(in, da, wval, dx[static_cast<std::size_t>(q)].data());
      }
    }
  }
  return dx;
}

}  // namespace

// --- RCNN -------------------------------------------------------------------

Vec encode_rcnn(const RcnnParams& p, const TermSequence& seq, RcnnCache* cache) {
  require(seq.length() >= 1, "empty sequence");
  require(seq.vectors.front().size() == p.w_gate.cols(), "RCNN input dimension mismatch");
  std::size_t hid = p.w_gate.rows();
  std::size_t n = p.w_level.size();
  Vec h(hid, 0.0);
  std::vector<Vec> c(n, Vec(hid, 0.0));
  if (cache) {
    *cache = RcnnCache{};
    cache->h.push_back(h);
    cache->c.push_back(c);
  }
  for (std::size_t t = 0; t < seq.length(); ++t) {
    const Vec& x = seq.vectors[t];
    Vec lam = affine(p.w_gate, x, p.u_gate, h, p.b_gate);
    sigmoid_inplace(lam);

    std::vector<Vec> wx(n);
    for (std::size_t m = 0; m < n; ++m) {
      wx[m].assign(hid, 0.0);
      ops().gemv(hid, p.w_level[m].cols(), p.w_level[m].values.data(), x.data(), wx[m].data());
    }
    // Level 1 blends toward W1 x; level m blends toward the previous
    // accumulator of level m-1 plus Wm x. All "previous" reads are time t-1.
    std::vector<Vec> cn(n, Vec(hid));
    for (std::size_t i = 0; i < hid; ++i) {
      cn[0][i] = lam[i] * c[0][i] + (1.0 - lam[i]) * wx[0][i];
    }
    for (std::size_t m = 1; m < n; ++m) {
      for (std::size_t i = 0; i < hid; ++i) {
        cn[m][i] = lam[i] * c[m][i] + (1.0 - lam[i]) * (c[m - 1][i] + wx[m][i]);
      }
    }
    for (std::size_t i = 0; i < hid; ++i) h[i] = std::tanh(cn[n - 1][i] + p.b_out.values[i]);
    c = std::move(cn);
    if (cache) {
      cache->lam.push_back(std::move(lam));
      cache->wx.push_back(std::move(wx));
      cache->c.push_back(c);
      cache->h.push_back(h);
    }
  }
  return h;
}

namespace {

std::vector<Vec> rcnn_backward(RcnnParams& p, const TermSequence& seq, const RcnnCache& cache,
                               const Vec& upstream) {
  std::size_t l = seq.length();
  std::size_t hid = p.w_gate.rows();
  std::size_t n = p.w_level.size();
  std::vector<Vec> dx(l, Vec(p.w_gate.cols(), 0.0));
  Vec dh = upstream;  // reaches earlier steps only through the gate
  std::vector<Vec> dc(n, Vec(hid, 0.0));
  Vec da_out(hid), dlam(hid), da_lam(hid), dwx(hid);
  for (std::size_t t = l; t-- > 0;) {
    const Vec& x = seq.vectors[t];
    const Vec& hp = cache.h[t];
    const Vec& ht = cache.h[t + 1];
    const Vec& lam = cache.lam[t];
    const std::vector<Vec>& cprev = cache.c[t];
    const std::vector<Vec>& wx = cache.wx[t];

    // h_t = tanh(c_t^n + b_out)
    for (std::size_t i = 0; i < hid; ++i) da_out[i] = dh[i] * tanh_grad(ht[i]);
    acc_bias(p.b_out, da_out);
    for (std::size_t i = 0; i < hid; ++i) dc[n - 1][i] += da_out[i];

    // Gate receives d/dlam of every level's blend.
    std::fill(dlam.begin(), dlam.end(), 0.0);
    for (std::size_t m = 0; m < n; ++m) {
      for (std::size_t i = 0; i < hid; ++i) {
        double toward = wx[m][i] + (m > 0 ? cprev[m - 1][i] : 0.0);
        dlam[i] += dc[m][i] * (cprev[m][i] - toward);
      }
    }

    // Level inputs and handoff to time t-1.
    std::vector<Vec> dcprev(n, Vec(hid, 0.0));
    for (std::size_t m = 0; m < n; ++m) {
      for (std::size_t i = 0; i < hid; ++i) {
        dwx[i] = dc[m][i] * (1.0 - lam[i]);
        dcprev[m][i] += dc[m][i] * lam[i];
        if (m > 0) dcprev[m - 1][i] += dwx[i];
      }
      acc_outer(p.w_level[m], dwx, x);
      acc_transposed(p.w_level[m], dwx, dx[t]);
    }

    for (std::size_t i = 0; i < hid; ++i) da_lam[i] = dlam[i] * sigmoid_grad(lam[i]);
    acc_outer(p.w_gate, da_lam, x);
    acc_outer(p.u_gate, da_lam, hp);
    acc_bias(p.b_gate, da_lam);
    acc_transposed(p.w_gate, da_lam, dx[t]);
    Vec dhp(hid, 0.0);
    acc_transposed(p.u_gate, da_lam, dhp);
    dh = std::move(dhp);
    dc = std::move(dcprev);
  }
  return dx;
}

std::vector<Vec> tea_backward(const TermSequence& seq, const Vec& upstream) {
  std::size_t n = seq.non_oov_count();
  std::vector<Vec> dx(seq.length(), Vec(seq.vectors.front().size(), 0.0));
  double inv = 1.0 / static_cast<double>(n);
  for (std::size_t t = 0; t < seq.length(); ++t) {
    if (!seq.oov_mask[t]) ops().axpy(upstream.size(), inv, upstream.data(), dx[t].data());
  }
  return dx;
}

}  // namespace

// --- Dispatch ----------------------------------------------------------------

namespace {

void check_dispatch(const EncoderConfig& config, const EncoderParams& params,
                    const TermSequence& seq) {
  require(seq.length() >= 1, "empty sequence");
  require(seq.vectors.front().size() == config.input_dim, "sequence does not match input_dim");
  bool match = false;
  switch (config.kind) {
    case EncoderKind::Tea: match = std::holds_alternative<TeaParams>(params); break;
    case EncoderKind::Gru: match = std::holds_alternative<GruParams>(params); break;
    case EncoderKind::Lstm: match = std::holds_alternative<LstmParams>(params); break;
    case EncoderKind::Cnn: match = std::holds_alternative<CnnParams>(params); break;
    case EncoderKind::Rcnn: match = std::holds_alternative<RcnnParams>(params); break;
  }
  require(match, "encoder parameters do not match config.kind");
}

}  // namespace

Vec encode(const EncoderConfig& config, const EncoderParams& params, const TermSequence& seq) {
  check_dispatch(config, params, seq);
  switch (config.kind) {
    case EncoderKind::Tea: return encode_tea(seq);
    case EncoderKind::Gru: return encode_gru(std::get<GruParams>(params), seq);
    case EncoderKind::Lstm: return encode_lstm(std::get<LstmParams>(params), seq);
    case EncoderKind::Cnn: return encode_cnn(std::get<CnnParams>(params), seq);
    case EncoderKind::Rcnn: return encode_rcnn(std::get<RcnnParams>(params), seq);
  }
  throw std::invalid_argument("unknown encoder kind");
}

Vec encode_cached(const EncoderConfig& config, const EncoderParams& params,
                  const TermSequence& seq, EncoderCache& cache) {
  check_dispatch(config, params, seq);
  switch (config.kind) {
    case EncoderKind::Tea:
      cache = TeaCache{};
      return encode_tea(seq);
    case EncoderKind::Gru: {
      GruCache c;
      Vec out = encode_gru(std::get<GruParams>(params), seq, &c);
      cache = std::move(c);
      return out;
    }
    case EncoderKind::Lstm: {
      LstmCache c;
      Vec out = encode_lstm(std::get<LstmParams>(params), seq, &c);
      cache = std::move(c);
      return out;
    }
    case EncoderKind::Cnn: {
      CnnCache c;
      Vec out = encode_cnn(std::get<CnnParams>(params), seq, &c);
      cache = std::move(c);
      return out;
    }
    case EncoderKind::Rcnn: {
      RcnnCache c;
      Vec out = encode_rcnn(std::get<RcnnParams>(params), seq, &c);
      cache = std::move(c);
      return out;
    }
  }
  throw std::invalid_argument("unknown encoder kind");
}

std::vector<Vec> encoder_backward(const EncoderConfig& config, EncoderParams& params,
                                  const TermSequence& seq, const EncoderCache& cache,
                                  const Vec& upstream) {
  check_dispatch(config, params, seq);
  if (std::holds_alternative<std::monostate>(cache)) {
    throw std::logic_error("encoder_backward called without a forward cache");
  }
  require(upstream.size() == config.output_dim(), "upstream dimension mismatch");
  switch (config.kind) {
    case EncoderKind::Tea:
      return tea_backward(seq, upstream);
    case EncoderKind::Gru:
      return gru_backward(std::get<GruParams>(params), seq, std::get<GruCache>(cache), upstream);
    case EncoderKind::Lstm:
      return lstm_backward(std::get<LstmParams>(params), seq, std::get<LstmCache>(cache),
                           upstream);
    case EncoderKind::Cnn:
      return cnn_backward(std::get<CnnParams>(params), seq, std::get<CnnCache>(cache), upstream);
    case EncoderKind::Rcnn:
      return rcnn_backward(std::get<RcnnParams>(params), seq, std::get<RcnnCache>(cache),
                           upstream);
  }
  throw std::invalid_argument("unknown encoder kind");
}

}  // namespace hyrank
