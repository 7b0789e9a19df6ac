#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "a2a/core.hpp"
#include "a2a/rng.hpp"
#include "a2a/schedule.hpp"

namespace a2a {

/// Noise predictor eps_theta(x_t, t) with reverse-mode derivative access.
class EpsilonPredictor {
 public:
  virtual ~EpsilonPredictor() = default;

  virtual int channels() const = 0;

  /// eps_hat; deterministic given (weights, x_t, t).
  virtual ModalityStack predict(const ModalityStack& x_t, int t) const = 0;

  /// d<cotangent, predict(x_t)>/dx_t; linear in the cotangent.
  virtual ModalityStack vjp(const ModalityStack& x_t, int t,
                            const ModalityStack& cotangent) const = 0;

  /// eps_hat plus a closure applying the Jacobian transpose at the same
  /// point. Overrides can retain the forward intermediates; the default
  /// recomputes.
  struct Prediction {
    ModalityStack eps;
    std::function<ModalityStack(const ModalityStack&)> vjp;
  };
  virtual Prediction predict_with_vjp(const ModalityStack& x_t, int t) const;
};

/// Closed-form predictor for a separable Gaussian prior N(mu, diag(var)).
/// E[x0|x_t] = mu + sqrt(abar) var / (abar var + 1 - abar) * (x_t - sqrt(abar) mu),
/// eps_hat = (x_t - sqrt(abar) E[x0|x_t]) / sqrt(1 - abar).
class GaussianAnalyticDenoiser : public EpsilonPredictor {
 public:
  GaussianAnalyticDenoiser(ModalityStack mu, ModalityStack var, NoiseSchedule sched);

  int channels() const override { return mu_.n(); }
  ModalityStack predict(const ModalityStack& x_t, int t) const override;
  ModalityStack vjp(const ModalityStack& x_t, int t, const ModalityStack& cot) const override;

  const ModalityStack& mu() const { return mu_; }
  const ModalityStack& var() const { return var_; }

 private:
  ModalityStack mu_;
  ModalityStack var_;
  NoiseSchedule sched_;
};

/// Same closed form for a full covariance over the flattened stack; intended
/// for small stacks where the exact joint posterior is known.
class DenseGaussianDenoiser : public EpsilonPredictor {
 public:
  /// cov is d x d row-major, d = shape.n()*h*w; must be symmetric positive
  /// semidefinite.
  DenseGaussianDenoiser(ModalityStack mu, std::vector<double> cov, NoiseSchedule sched);

  int channels() const override { return mu_.n(); }
  ModalityStack predict(const ModalityStack& x_t, int t) const override;
  ModalityStack vjp(const ModalityStack& x_t, int t, const ModalityStack& cot) const override;

 private:
  std::vector<double> apply_sigma_minv(double abar, std::span<const double> v) const;

  ModalityStack mu_;
  std::vector<double> cov_;
  NoiseSchedule sched_;
};

struct ConvArch {
  int channels = 5;
  int width = 32;
  int embed_dim = 64;  // even

  bool operator==(const ConvArch&) const = default;
};

struct TrainConfig {
  int iterations = 20000;
  int batch_size = 8;
  double lr = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int log_every = 500;  // progress print cadence; loss is recorded every step
};

/// Fixed 4-layer convolutional noise predictor with sinusoidal timestep
/// conditioning. Forward and reverse passes are written out by hand.
class ConvDenoiser : public EpsilonPredictor {
 public:
  explicit ConvDenoiser(ConvArch arch);  // zero weights

  /// He fan-in initialization drawn from a stream seeded with `seed`.
  static ConvDenoiser random_init(ConvArch arch, std::uint64_t seed);

  int channels() const override { return arch_.channels; }
  const ConvArch& arch() const { return arch_; }
  std::uint64_t init_seed() const { return init_seed_; }

  ModalityStack predict(const ModalityStack& x_t, int t) const override;
  ModalityStack vjp(const ModalityStack& x_t, int t, const ModalityStack& cot) const override;
  Prediction predict_with_vjp(const ModalityStack& x_t, int t) const override;

  std::span<const double> params() const { return params_; }
  std::span<double> params_mut() { return params_; }
  std::size_t param_count() const { return params_.size(); }

  struct TensorInfo {
    std::string name;
    std::vector<int> shape;
    std::size_t offset;  // in doubles
    std::size_t count;
  };
  const std::vector<TensorInfo>& tensors() const { return tensors_; }

 private:
  struct Trace;
  ModalityStack forward(const ModalityStack& x_t, int t, Trace* trace) const;
  ModalityStack backward_input(const Trace& trace, const ModalityStack& cot) const;
  void backward_full(const Trace& trace, const ModalityStack& cot, std::span<double> grad) const;

  friend std::vector<double> train(ConvDenoiser&, std::span<const ModalityStack>,
                                   const NoiseSchedule&, const TrainConfig&);
  friend ConvDenoiser load_weights(const std::string&);

  ConvArch arch_;
  std::uint64_t init_seed_ = 0;
  std::vector<double> params_;
  std::vector<TensorInfo> tensors_;
};

/// DDPM training: t ~ U{1..T}, eps ~ N(0, I), x0 uniform from the dataset,
/// MSE between eps and eps_theta(q_sample(x0, t, eps), t), Adam updates.
/// Returns the per-step loss trace.
std::vector<double> train(ConvDenoiser& model, std::span<const ModalityStack> dataset,
                          const NoiseSchedule& sched, const TrainConfig& cfg);

/// Weights file ("A2AW"): little-endian header with the architecture
/// descriptor and init seed, then the flat f64 parameter block in
/// declaration order. A sidecar text manifest (path + ".manifest.txt") lists
/// tensor names, shapes and byte offsets.
void save_weights(const std::string& path, const ConvDenoiser& model);
ConvDenoiser load_weights(const std::string& path);

}  // namespace a2a
