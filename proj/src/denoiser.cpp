#include "a2a/denoiser.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "a2a/kernels.hpp"

namespace a2a {

EpsilonPredictor::Prediction EpsilonPredictor::predict_with_vjp(const ModalityStack& x_t,
                                                                int t) const {
  ModalityStack eps = predict(x_t, t);
  return {std::move(eps),
          [this, x_t, t](const ModalityStack& cot) { return vjp(x_t, t, cot); }};
}

// -- GaussianAnalyticDenoiser -------------------------------------------------

GaussianAnalyticDenoiser::GaussianAnalyticDenoiser(ModalityStack mu, ModalityStack var,
                                                   NoiseSchedule sched)
    : mu_(std::move(mu)), var_(std::move(var)), sched_(std::move(sched)) {
  if (mu_.data.size() != var_.data.size())
    throw std::invalid_argument("GaussianAnalyticDenoiser: mu/var shape mismatch");
  for (double v : var_.data)
    if (v < 0.0) throw std::invalid_argument("GaussianAnalyticDenoiser: negative variance");
}

ModalityStack GaussianAnalyticDenoiser::predict(const ModalityStack& x_t, int t) const {
  const double abar = sched_.alpha_bar(t);
  const double sa = std::sqrt(abar);
  const double sb = std::sqrt(1.0 - abar);
  ModalityStack out = x_t;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double k = sa * var_.data[i] / (abar * var_.data[i] + 1.0 - abar);
    const double e0 = mu_.data[i] + k * (x_t.data[i] - sa * mu_.data[i]);
    out.data[i] = (x_t.data[i] - sa * e0) / sb;
  }
  return out;
}

ModalityStack GaussianAnalyticDenoiser::vjp(const ModalityStack& x_t, int t,
                                            const ModalityStack& cot) const {
  const double abar = sched_.alpha_bar(t);
  const double sa = std::sqrt(abar);
  const double sb = std::sqrt(1.0 - abar);
  ModalityStack out = cot;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double k = sa * var_.data[i] / (abar * var_.data[i] + 1.0 - abar);
    out.data[i] = cot.data[i] * (1.0 - sa * k) / sb;
  }
  return out;
}

// -- DenseGaussianDenoiser ----------------------------------------------------

namespace {

// Gaussian elimination with partial pivoting; a is destroyed.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, int d) {
  for (int col = 0; col < d; ++col) {
    int piv = col;
    for (int r = col + 1; r < d; ++r)
      if (std::abs(a[r * d + col]) > std::abs(a[piv * d + col])) piv = r;
    if (a[piv * d + col] == 0.0) throw std::runtime_error("solve_dense: singular matrix");
    if (piv != col) {
      for (int c = 0; c < d; ++c) std::swap(a[piv * d + c], a[col * d + c]);
      std::swap(b[piv], b[col]);
    }
    const double inv = 1.0 / a[col * d + col];
    for (int r = col + 1; r < d; ++r) {
      const double f = a[r * d + col] * inv;
      if (f == 0.0) continue;
      for (int c = col; c < d; ++c) a[r * d + c] -= f * a[col * d + c];
      b[r] -= f * b[col];
    }
  }
  for (int r = d - 1; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < d; ++c) acc -= a[r * d + c] * b[c];
    b[r] = acc / a[r * d + r];
  }
  return b;
}

}  // namespace

DenseGaussianDenoiser::DenseGaussianDenoiser(ModalityStack mu, std::vector<double> cov,
                                             NoiseSchedule sched)
    : mu_(std::move(mu)), cov_(std::move(cov)), sched_(std::move(sched)) {
  const std::size_t d = mu_.data.size();
  if (cov_.size() != d * d)
    throw std::invalid_argument("DenseGaussianDenoiser: cov must be d x d");
}

// returns Sigma (abar Sigma + (1-abar) I)^{-1} v
std::vector<double> DenseGaussianDenoiser::apply_sigma_minv(double abar,
                                                            std::span<const double> v) const {
  const int d = static_cast<int>(mu_.data.size());
  std::vector<double> m(cov_.begin(), cov_.end());
  for (int i = 0; i < d * d; ++i) m[i] *= abar;
  for (int i = 0; i < d; ++i) m[i * d + i] += 1.0 - abar;
  std::vector<double> s = solve_dense(std::move(m), std::vector<double>(v.begin(), v.end()), d);
  std::vector<double> out(d, 0.0);
  for (int i = 0; i < d; ++i) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc += cov_[i * d + j] * s[j];
    out[i] = acc;
  }
  return out;
}

ModalityStack DenseGaussianDenoiser::predict(const ModalityStack& x_t, int t) const {
  if (x_t.data.size() != mu_.data.size())
    throw std::invalid_argument("DenseGaussianDenoiser: shape mismatch");
  const double abar = sched_.alpha_bar(t);
  const double sa = std::sqrt(abar);
  const double sb = std::sqrt(1.0 - abar);
  const int d = static_cast<int>(mu_.data.size());
  std::vector<double> r(d);
  for (int i = 0; i < d; ++i) r[i] = x_t.data[i] - sa * mu_.data[i];
  std::vector<double> sm = apply_sigma_minv(abar, r);
  ModalityStack out = x_t;
  for (int i = 0; i < d; ++i) {
    const double e0 = mu_.data[i] + sa * sm[i];
    out.data[i] = (x_t.data[i] - sa * e0) / sb;
  }
  return out;
}

ModalityStack DenseGaussianDenoiser::vjp(const ModalityStack& x_t, int t,
                                         const ModalityStack& cot) const {
  if (cot.data.size() != mu_.data.size())
    throw std::invalid_argument("DenseGaussianDenoiser: shape mismatch");
  const double abar = sched_.alpha_bar(t);
  const double sb = std::sqrt(1.0 - abar);
  const int d = static_cast<int>(mu_.data.size());
  // J = (I - abar Sigma M^{-1})/sqrt(1-abar) is symmetric
  std::vector<double> sm = apply_sigma_minv(abar, cot.data);
  ModalityStack out = cot;
  for (int i = 0; i < d; ++i) out.data[i] = (cot.data[i] - abar * sm[i]) / sb;
  return out;
}

// -- ConvDenoiser -------------------------------------------------------------

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
inline double silu(double z) { return z * sigmoid(z); }
inline double silu_grad(double z) {
  const double s = sigmoid(z);
  return s * (1.0 + z * (1.0 - s));
}

std::vector<double> time_embedding(int t, int dim) {
  const int half = dim / 2;
  std::vector<double> e(dim);
  for (int j = 0; j < half; ++j) {
    const double f =
        half > 1 ? std::exp(-std::log(10000.0) * static_cast<double>(j) / (half - 1)) : 1.0;
    e[j] = std::sin(t * f);
    e[half + j] = std::cos(t * f);
  }
  return e;
}

// out = W v + b, W row-major [rows, cols]
void affine(std::span<const double> wts, std::span<const double> bias, std::span<const double> v,
            std::span<double> out) {
  const std::size_t rows = bias.size(), cols = v.size();
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = bias[i];
    const double* row = wts.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
}

}  // namespace

struct ConvDenoiser::Trace {
  int t = 0;
  int h = 0, w = 0;
  std::vector<double> x;                      // input copy
  std::vector<double> z1, a1, z2, a2, z3, a3;  // conv intermediates
  std::vector<double> emb, h_pre, h_act;       // time path
};

ConvDenoiser::ConvDenoiser(ConvArch arch) : arch_(arch) {
  if (arch_.channels < 1 || arch_.width < 1 || arch_.embed_dim < 2 || arch_.embed_dim % 2 != 0)
    throw std::invalid_argument("ConvDenoiser: bad architecture");
  const int n = arch_.channels, wd = arch_.width, em = arch_.embed_dim;
  auto push = [&](const std::string& name, std::vector<int> shape) {
    std::size_t count = 1;
    for (int s : shape) count *= static_cast<std::size_t>(s);
    const std::size_t offset = tensors_.empty()
                                   ? 0
                                   : tensors_.back().offset + tensors_.back().count;
    tensors_.push_back({name, std::move(shape), offset, count});
  };
  push("conv1.weight", {wd, n, 3, 3});
  push("conv1.bias", {wd});
  push("conv2.weight", {wd, wd, 3, 3});
  push("conv2.bias", {wd});
  push("conv3.weight", {wd, wd, 3, 3});
  push("conv3.bias", {wd});
  push("conv4.weight", {n, wd, 3, 3});
  push("conv4.bias", {n});
  push("time1.weight", {em, em});
  push("time1.bias", {em});
  push("time2.weight", {2 * wd, em});
  push("time2.bias", {2 * wd});
  params_.assign(tensors_.back().offset + tensors_.back().count, 0.0);
}

ConvDenoiser ConvDenoiser::random_init(ConvArch arch, std::uint64_t seed) {
  ConvDenoiser model(arch);
  model.init_seed_ = seed;
  Rng rng(seed);
  for (const auto& tv : model.tensors_) {
    if (tv.name.ends_with(".bias")) continue;
    // fan-in: ci*9 for convs, input dim for affines
    const std::size_t fan_in = tv.shape.size() == 4
                                   ? static_cast<std::size_t>(tv.shape[1]) * 9
                                   : static_cast<std::size_t>(tv.shape[1]);
    const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
    double* p = model.params_.data() + tv.offset;
    for (std::size_t i = 0; i < tv.count; ++i) p[i] = std * rng.normal();
  }
  return model;
}

namespace {
// tensor order must match the ConvDenoiser constructor
enum TensorIdx { C1W, C1B, C2W, C2B, C3W, C3B, C4W, C4B, E1W, E1B, E2W, E2B };
}  // namespace

ModalityStack ConvDenoiser::forward(const ModalityStack& x, int t, Trace* tr) const {
  if (x.n() != arch_.channels)
    throw std::invalid_argument("ConvDenoiser: channel-count mismatch");
  const int n = arch_.channels, wd = arch_.width, em = arch_.embed_dim;
  const int h = x.h, w = x.w;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  auto tp = [&](TensorIdx i) { return params_.data() + tensors_[i].offset; };

  // time path
  std::vector<double> emb = time_embedding(t, em);
  std::vector<double> h_pre(em), h_act(em), tvec(2 * wd);
  affine({tp(E1W), tensors_[E1W].count}, {tp(E1B), tensors_[E1B].count}, emb, h_pre);
  for (int i = 0; i < em; ++i) h_act[i] = silu(h_pre[i]);
  affine({tp(E2W), tensors_[E2W].count}, {tp(E2B), tensors_[E2B].count}, h_act, tvec);

  auto conv_layer = [&](const double* in, int ci, TensorIdx wi, TensorIdx bi, int co,
                        std::vector<double>& z, const double* tbias) {
    z.resize(static_cast<std::size_t>(co) * hw);
    kernels::conv3x3(in, ci, h, w, tp(wi), co, z.data());
    const double* bias = tp(bi);
    for (int c = 0; c < co; ++c) {
      const double b = bias[c] + (tbias ? tbias[c] : 0.0);
      double* row = z.data() + static_cast<std::size_t>(c) * hw;
      for (std::size_t i = 0; i < hw; ++i) row[i] += b;
    }
  };
  auto activate = [&](const std::vector<double>& z, std::vector<double>& a) {
    a.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = silu(z[i]);
  };

  std::vector<double> z1, a1, z2, a2, z3, a3;
  conv_layer(x.data.data(), n, C1W, C1B, wd, z1, tvec.data());
  activate(z1, a1);
  conv_layer(a1.data(), wd, C2W, C2B, wd, z2, tvec.data() + wd);
  activate(z2, a2);
  conv_layer(a2.data(), wd, C3W, C3B, wd, z3, nullptr);
  activate(z3, a3);
  ModalityStack out = zeros_like(x);
  std::vector<double> z4;
  conv_layer(a3.data(), wd, C4W, C4B, n, z4, nullptr);
  out.data = std::move(z4);

  if (tr) {
    tr->t = t;
    tr->h = h;
    tr->w = w;
    tr->x = x.data;
    tr->z1 = std::move(z1);
    tr->a1 = std::move(a1);
    tr->z2 = std::move(z2);
    tr->a2 = std::move(a2);
    tr->z3 = std::move(z3);
    tr->a3 = std::move(a3);
    tr->emb = std::move(emb);
    tr->h_pre = std::move(h_pre);
    tr->h_act = std::move(h_act);
  }
  return out;
}

ModalityStack ConvDenoiser::predict(const ModalityStack& x_t, int t) const {
  return forward(x_t, t, nullptr);
}

namespace {
void silu_backward(const std::vector<double>& z, std::vector<double>& g) {
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= silu_grad(z[i]);
}
}  // namespace

ModalityStack ConvDenoiser::backward_input(const Trace& tr, const ModalityStack& cot) const {
  const int n = arch_.channels, wd = arch_.width;
  const int h = tr.h, w = tr.w;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  if (cot.data.size() != static_cast<std::size_t>(n) * hw)
    throw std::invalid_argument("ConvDenoiser: cotangent shape mismatch");
  auto tp = [&](TensorIdx i) { return params_.data() + tensors_[i].offset; };

  std::vector<double> d3(static_cast<std::size_t>(wd) * hw);
  kernels::conv3x3_input_grad(cot.data.data(), n, h, w, tp(C4W), wd, d3.data());
  silu_backward(tr.z3, d3);
  std::vector<double> d2(d3.size());
  kernels::conv3x3_input_grad(d3.data(), wd, h, w, tp(C3W), wd, d2.data());
  silu_backward(tr.z2, d2);
  std::vector<double> d1(d2.size());
  kernels::conv3x3_input_grad(d2.data(), wd, h, w, tp(C2W), wd, d1.data());
  silu_backward(tr.z1, d1);
  ModalityStack out = cot;
  kernels::conv3x3_input_grad(d1.data(), wd, h, w, tp(C1W), n, out.data.data());
  return out;
}

void ConvDenoiser::backward_full(const Trace& tr, const ModalityStack& cot,
                                 std::span<double> grad) const {
  const int n = arch_.channels, wd = arch_.width, em = arch_.embed_dim;
  const int h = tr.h, w = tr.w;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  if (grad.size() != params_.size())
    throw std::invalid_argument("ConvDenoiser: gradient buffer size mismatch");
  auto tp = [&](TensorIdx i) { return params_.data() + tensors_[i].offset; };
  auto gp = [&](TensorIdx i) { return grad.data() + tensors_[i].offset; };
  auto bias_grad = [&](const double* dz, int co, double* db) {
    for (int c = 0; c < co; ++c) {
      double acc = 0.0;
      const double* row = dz + static_cast<std::size_t>(c) * hw;
      for (std::size_t i = 0; i < hw; ++i) acc += row[i];
      db[c] = acc;
    }
  };

  // layer 4
  kernels::conv3x3_weight_grad(cot.data.data(), n, tr.a3.data(), wd, h, w, gp(C4W));
  bias_grad(cot.data.data(), n, gp(C4B));
  std::vector<double> d3(static_cast<std::size_t>(wd) * hw);
  kernels::conv3x3_input_grad(cot.data.data(), n, h, w, tp(C4W), wd, d3.data());
  silu_backward(tr.z3, d3);
  // layer 3
  kernels::conv3x3_weight_grad(d3.data(), wd, tr.a2.data(), wd, h, w, gp(C3W));
  bias_grad(d3.data(), wd, gp(C3B));
  std::vector<double> d2(d3.size());
  kernels::conv3x3_input_grad(d3.data(), wd, h, w, tp(C3W), wd, d2.data());
  silu_backward(tr.z2, d2);
  // layer 2 (time bias shares the channel bias gradient)
  kernels::conv3x3_weight_grad(d2.data(), wd, tr.a1.data(), wd, h, w, gp(C2W));
  bias_grad(d2.data(), wd, gp(C2B));
  std::vector<double> dtvec(2 * wd);
  std::copy(gp(C2B), gp(C2B) + wd, dtvec.begin() + wd);
  std::vector<double> d1(d2.size());
  kernels::conv3x3_input_grad(d2.data(), wd, h, w, tp(C2W), wd, d1.data());
  silu_backward(tr.z1, d1);
  // layer 1
  kernels::conv3x3_weight_grad(d1.data(), wd, tr.x.data(), n, h, w, gp(C1W));
  bias_grad(d1.data(), wd, gp(C1B));
  std::copy(gp(C1B), gp(C1B) + wd, dtvec.begin());

  // time path
  double* ge2w = gp(E2W);
  double* ge2b = gp(E2B);
  std::vector<double> dh(em, 0.0);
  const double* e2w = tp(E2W);
  for (int i = 0; i < 2 * wd; ++i) {
    ge2b[i] = dtvec[i];
    for (int j = 0; j < em; ++j) {
      ge2w[i * em + j] = dtvec[i] * tr.h_act[j];
      dh[j] += e2w[i * em + j] * dtvec[i];
    }
  }
  for (int j = 0; j < em; ++j) dh[j] *= silu_grad(tr.h_pre[j]);
  double* ge1w = gp(E1W);
  double* ge1b = gp(E1B);
  for (int i = 0; i < em; ++i) {
    ge1b[i] = dh[i];
    for (int j = 0; j < em; ++j) ge1w[i * em + j] = dh[i] * tr.emb[j];
  }
}

ModalityStack ConvDenoiser::vjp(const ModalityStack& x_t, int t, const ModalityStack& cot) const {
  Trace tr;
  forward(x_t, t, &tr);
  return backward_input(tr, cot);
}

EpsilonPredictor::Prediction ConvDenoiser::predict_with_vjp(const ModalityStack& x_t,
                                                            int t) const {
  auto tr = std::make_shared<Trace>();
  ModalityStack eps = forward(x_t, t, tr.get());
  return {std::move(eps), [this, tr](const ModalityStack& cot) {
            return backward_input(*tr, cot);
          }};
}

// -- training -----------------------------------------------------------------

std::vector<double> train(ConvDenoiser& model, std::span<const ModalityStack> dataset,
                          const NoiseSchedule& sched, const TrainConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.iterations < 0 || cfg.batch_size < 1)
    throw std::invalid_argument("train: bad iteration/batch settings");
  if (!(cfg.lr >= 0.0)) throw std::invalid_argument("train: lr must be >= 0");
  const ModalityStack& first = dataset[0];
  for (const auto& s : dataset)
    if (!s.same_shape(first)) throw std::invalid_argument("train: inconsistent dataset shapes");
  if (first.n() != model.channels())
    throw std::invalid_argument("train: dataset/model channel mismatch");

  const int B = cfg.batch_size;
  const std::size_t P = model.param_count();
  const double inv_count = 1.0 / (static_cast<double>(B) * first.size());
  Rng rng(cfg.seed);

  std::vector<double> m(P, 0.0), v(P, 0.0), g(P, 0.0);
  std::vector<std::vector<double>> grads(B, std::vector<double>(P, 0.0));
  std::vector<ModalityStack> xt(B), eps(B);
  std::vector<int> ts(B);
  std::vector<double> batch_loss(B, 0.0);
  std::vector<double> losses;
  losses.reserve(cfg.iterations);

  for (int step = 1; step <= cfg.iterations; ++step) {
    // all random draws happen serially so the trace is thread-count invariant
    for (int b = 0; b < B; ++b) {
      const std::size_t idx = rng.uniform_index(dataset.size());
      ts[b] = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(sched.T())));
      eps[b] = rng.normal_like(first);
      xt[b] = q_sample(dataset[idx], ts[b], eps[b], sched);
    }
#pragma omp parallel for schedule(static)
    for (int b = 0; b < B; ++b) {
      ConvDenoiser::Trace tr;
      ModalityStack out = model.forward(xt[b], ts[b], &tr);
      double l = 0.0;
      for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] -= eps[b].data[i];  // residual
        l += out.data[i] * out.data[i];
      }
      batch_loss[b] = l;
      for (double& r : out.data) r *= 2.0 * inv_count;
      model.backward_full(tr, out, grads[b]);
    }
    double loss = 0.0;
    for (int b = 0; b < B; ++b) loss += batch_loss[b];
    loss *= inv_count;
    losses.push_back(loss);

    // fixed-order reduction keeps the update deterministic
    std::fill(g.begin(), g.end(), 0.0);
    for (int b = 0; b < B; ++b) {
      const double* gb = grads[b].data();
      for (std::size_t p = 0; p < P; ++p) g[p] += gb[p];
    }
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, step);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, step);
    double* w = model.params_mut().data();
    for (std::size_t p = 0; p < P; ++p) {
      m[p] = cfg.adam_beta1 * m[p] + (1.0 - cfg.adam_beta1) * g[p];
      v[p] = cfg.adam_beta2 * v[p] + (1.0 - cfg.adam_beta2) * g[p] * g[p];
      w[p] -= cfg.lr * (m[p] / bc1) / (std::sqrt(v[p] / bc2) + cfg.adam_eps);
    }
    if (cfg.log_every > 0 && step % cfg.log_every == 0)
      std::fprintf(stderr, "train step %d/%d loss %.6f\n", step, cfg.iterations, loss);
  }
  return losses;
}

// -- weights file -------------------------------------------------------------

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("weights file: truncated header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("weights file: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

static_assert(std::endian::native == std::endian::little,
              "f64 payload is written in native little-endian order");

constexpr std::uint32_t kWeightsVersion = 1;

}  // namespace

void save_weights(const std::string& path, const ConvDenoiser& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_weights: cannot open " + path);
  os.write("A2AW", 4);
  write_u32(os, kWeightsVersion);
  write_u32(os, static_cast<std::uint32_t>(model.arch().channels));
  write_u32(os, 3);  // hidden conv layers
  for (int i = 0; i < 3; ++i) write_u32(os, static_cast<std::uint32_t>(model.arch().width));
  write_u32(os, static_cast<std::uint32_t>(model.arch().embed_dim));
  write_u64(os, model.init_seed());
  const std::size_t header_bytes = 4 + 4 + 4 + 4 + 12 + 4 + 8;
  os.write(reinterpret_cast<const char*>(model.params().data()),
           static_cast<std::streamsize>(model.params().size() * sizeof(double)));
  if (!os) throw std::runtime_error("save_weights: write failed for " + path);
  os.close();

  std::ofstream mf(path + ".manifest.txt");
  if (!mf) throw std::runtime_error("save_weights: cannot open manifest for " + path);
  mf << "a2a weights manifest\n";
  mf << "channels " << model.arch().channels << " width " << model.arch().width << " embed "
     << model.arch().embed_dim << "\n";
  for (const auto& tv : model.tensors()) {
    mf << tv.name << " shape";
    for (int s : tv.shape) mf << " " << s;
    mf << " offset_bytes " << (header_bytes + tv.offset * sizeof(double)) << " count " << tv.count
       << "\n";
  }
}

ConvDenoiser load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_weights: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "A2AW", 4) != 0)
    throw std::runtime_error("load_weights: bad magic");
  const std::uint32_t version = read_u32(is);
  if (version != kWeightsVersion) throw std::runtime_error("load_weights: version mismatch");
  ConvArch arch;
  arch.channels = static_cast<int>(read_u32(is));
  const std::uint32_t hidden = read_u32(is);
  if (hidden != 3) throw std::runtime_error("load_weights: unsupported layer count");
  std::uint32_t widths[3];
  for (auto& wv : widths) wv = read_u32(is);
  if (widths[0] != widths[1] || widths[1] != widths[2])
    throw std::runtime_error("load_weights: unsupported non-uniform widths");
  arch.width = static_cast<int>(widths[0]);
  arch.embed_dim = static_cast<int>(read_u32(is));
  const std::uint64_t seed = read_u64(is);

  ConvDenoiser model(arch);
  model.init_seed_ = seed;
  is.read(reinterpret_cast<char*>(model.params_mut().data()),
          static_cast<std::streamsize>(model.param_count() * sizeof(double)));
  if (static_cast<std::size_t>(is.gcount()) != model.param_count() * sizeof(double))
    throw std::runtime_error("load_weights: truncated payload");
  return model;
}

}  // namespace a2a
