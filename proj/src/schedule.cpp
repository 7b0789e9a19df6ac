#include "a2a/schedule.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace a2a {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw std::invalid_argument("NoiseSchedule: empty beta table");
  alpha_bars_.resize(betas_.size());
  posterior_stds_.resize(betas_.size());
  double abar = 1.0;
  for (std::size_t i = 0; i < betas_.size(); ++i) {
    const double b = betas_[i];
    if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("NoiseSchedule: beta_t out of (0,1)");
    const double abar_prev = abar;
    abar *= 1.0 - b;
    alpha_bars_[i] = abar;
    posterior_stds_[i] = i == 0 ? 0.0 : std::sqrt((1.0 - abar_prev) / (1.0 - abar) * b);
  }
}

void NoiseSchedule::check_t(int t, int lo) const {
  if (t < lo || t > T()) throw std::invalid_argument("NoiseSchedule: timestep out of range");
}

double NoiseSchedule::beta(int t) const {
  check_t(t, 1);
  return betas_[t - 1];
}

double NoiseSchedule::alpha(int t) const { return 1.0 - beta(t); }

double NoiseSchedule::alpha_bar(int t) const {
  check_t(t, 0);
  return t == 0 ? 1.0 : alpha_bars_[t - 1];
}

double NoiseSchedule::posterior_std(int t) const {
  check_t(t, 1);
  return posterior_stds_[t - 1];
}

NoiseSchedule linear_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) throw std::invalid_argument("linear_schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw std::invalid_argument("linear_schedule: need 0 < beta_start <= beta_end < 1");
  std::vector<double> betas(T);
  for (int t = 0; t < T; ++t)
    betas[t] = T == 1 ? beta_start
                      : beta_start + (beta_end - beta_start) * static_cast<double>(t) / (T - 1);
  return NoiseSchedule(std::move(betas));
}

NoiseSchedule cosine_schedule(int T, double s) {
  if (T < 1) throw std::invalid_argument("cosine_schedule: T must be >= 1");
  if (!(s > 0.0)) throw std::invalid_argument("cosine_schedule: s must be positive");
  auto f = [&](double t) {
    const double z = (t / T + s) / (1.0 + s) * std::numbers::pi / 2.0;
    const double c = std::cos(z);
    return c * c;
  };
  const double f0 = f(0.0);
  std::vector<double> betas(T);
  double abar_prev = 1.0;
  for (int t = 1; t <= T; ++t) {
    const double abar = f(static_cast<double>(t)) / f0;
    double beta = 1.0 - abar / abar_prev;
    if (beta > 0.999) beta = 0.999;
    betas[t - 1] = beta;
    abar_prev *= 1.0 - beta;  // self-consistent with the clipped table
  }
  return NoiseSchedule(std::move(betas));
}

static void check_shapes(const ModalityStack& a, const ModalityStack& b, const char* op) {
  if (a.data.size() != b.data.size() || a.h != b.h || a.w != b.w)
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

ModalityStack q_sample(const ModalityStack& x0, int t, const ModalityStack& eps,
                       const NoiseSchedule& sched) {
  check_shapes(x0, eps, "q_sample");
  const double abar = sched.alpha_bar(t);
  if (t < 1) throw std::invalid_argument("q_sample: timestep out of range");
  const double a = std::sqrt(abar);
  const double b = std::sqrt(1.0 - abar);
  ModalityStack out = x0;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a * x0.data[i] + b * eps.data[i];
  return out;
}

ModalityStack predict_x0(const ModalityStack& x_t, int t, const ModalityStack& eps_hat,
                         const NoiseSchedule& sched) {
  check_shapes(x_t, eps_hat, "predict_x0");
  const double abar = sched.alpha_bar(t);
  if (t < 1) throw std::invalid_argument("predict_x0: timestep out of range");
  const double inv = 1.0 / std::sqrt(abar);
  const double b = std::sqrt(1.0 - abar);
  ModalityStack out = x_t;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = (x_t.data[i] - b * eps_hat.data[i]) * inv;
  return out;
}

}  // namespace a2a
