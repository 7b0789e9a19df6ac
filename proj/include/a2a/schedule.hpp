#pragma once

#include <vector>

#include "a2a/core.hpp"

namespace a2a {

/// Forward-diffusion variance schedule. Timesteps are 1-indexed: tables hold
/// beta_t for t in [1, T] at index t-1, and alpha_bar(0) == 1 by convention.
class NoiseSchedule {
 public:
  NoiseSchedule(std::vector<double> betas);

  int T() const { return static_cast<int>(betas_.size()); }

  double beta(int t) const;
  double alpha(int t) const;
  /// alpha_bar(t) for t in [0, T]; alpha_bar(0) == 1.
  double alpha_bar(int t) const;
  /// Reverse-process noise scale beta-tilde_t (the DDPM posterior standard
  /// deviation): sqrt((1 - abar_{t-1}) / (1 - abar_t) * beta_t); zero at t=1.
  double posterior_std(int t) const;

  const std::vector<double>& betas() const { return betas_; }

 private:
  void check_t(int t, int lo) const;

  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
  std::vector<double> posterior_stds_;
};

/// beta_t linearly interpolated between beta_start and beta_end, endpoints
/// inclusive.
NoiseSchedule linear_schedule(int T, double beta_start, double beta_end);

/// Cosine schedule: abar_t = f(t)/f(0) with f(t) = cos^2(((t/T + s)/(1+s)) * pi/2),
/// beta_t = 1 - abar_t/abar_{t-1} clipped to <= 0.999, tables recomputed from
/// the clipped betas.
NoiseSchedule cosine_schedule(int T, double s = 0.008);

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
ModalityStack q_sample(const ModalityStack& x0, int t, const ModalityStack& eps,
                       const NoiseSchedule& sched);

/// x0_hat = (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t).
ModalityStack predict_x0(const ModalityStack& x_t, int t, const ModalityStack& eps_hat,
                         const NoiseSchedule& sched);

}  // namespace a2a
