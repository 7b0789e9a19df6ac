#include <doctest.h>

#include <cmath>
#include <numbers>

#include "a2a/rng.hpp"
#include "a2a/schedule.hpp"

using namespace a2a;

namespace {
ModalityStack scalar_stack(double v) {
  ModalityStack s({"m"}, 1, 1);
  s.data[0] = v;
  return s;
}
}  // namespace

TEST_CASE("linear schedule single step") {
  NoiseSchedule sched = linear_schedule(1, 0.1, 0.1);
  CHECK(sched.T() == 1);
  CHECK(sched.beta(1) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(sched.alpha_bar(1) == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("linear schedule T=4 table") {
  NoiseSchedule sched = linear_schedule(4, 0.1, 0.4);
  const double betas[] = {0.1, 0.2, 0.3, 0.4};
  const double abars[] = {0.9, 0.72, 0.504, 0.3024};
  for (int t = 1; t <= 4; ++t) {
    CHECK(sched.beta(t) == doctest::Approx(betas[t - 1]).epsilon(1e-14));
    CHECK(sched.alpha_bar(t) == doctest::Approx(abars[t - 1]).epsilon(1e-14));
  }
  CHECK(sched.alpha_bar(0) == 1.0);
}

TEST_CASE("linear schedule boundary rejection") {
  CHECK_THROWS_AS(linear_schedule(4, 0.1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(linear_schedule(4, 0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(linear_schedule(4, 0.5, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(linear_schedule(0, 0.1, 0.2), std::invalid_argument);
}

TEST_CASE("cosine schedule first alpha-bar matches the construction") {
  const int T = 1000;
  const double s = 0.008;
  NoiseSchedule sched = cosine_schedule(T, s);
  auto f = [&](double t) {
    const double z = (t / T + s) / (1.0 + s) * std::numbers::pi / 2.0;
    return std::cos(z) * std::cos(z);
  };
  CHECK(sched.alpha_bar(1) == doctest::Approx(f(1.0) / f(0.0)).epsilon(1e-12));
}

TEST_CASE("cosine schedule is monotone with clipped betas") {
  NoiseSchedule sched = cosine_schedule(1000);
  double prev = 1.0;
  for (int t = 1; t <= 1000; ++t) {
    CHECK(sched.beta(t) <= 0.999);
    CHECK(sched.beta(t) > 0.0);
    CHECK(sched.alpha_bar(t) < prev);
    CHECK(sched.alpha_bar(t) > 0.0);
    prev = sched.alpha_bar(t);
  }
  CHECK(sched.alpha_bar(1000) < sched.alpha_bar(1));
}

TEST_CASE("alpha-bar monotone for random schedule parameters") {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const int T = 2 + static_cast<int>(rng.uniform_index(200));
    NoiseSchedule sched = trial % 2 == 0
                              ? linear_schedule(T, 1e-4 + 0.01 * rng.uniform(),
                                                0.02 + 0.5 * rng.uniform())
                              : cosine_schedule(T, 1e-3 + 0.1 * rng.uniform());
    for (int t = 1; t <= T; ++t) CHECK(sched.alpha_bar(t) < sched.alpha_bar(t - 1));
  }
}

TEST_CASE("q_sample near-noiseless limit") {
  NoiseSchedule sched = linear_schedule(1, 1e-12, 1e-12);
  ModalityStack x0 = scalar_stack(0.8);
  ModalityStack eps = scalar_stack(1.3);
  ModalityStack xt = q_sample(x0, 1, eps, sched);
  CHECK(xt.data[0] == doctest::Approx(0.8).epsilon(1e-5));
}

TEST_CASE("q_sample with zero noise scales deterministically") {
  NoiseSchedule sched = linear_schedule(4, 0.1, 0.4);
  ModalityStack x0 = scalar_stack(2.0);
  ModalityStack eps = scalar_stack(0.0);
  ModalityStack xt = q_sample(x0, 2, eps, sched);
  CHECK(xt.data[0] == doctest::Approx(2.0 * std::sqrt(0.72)).epsilon(1e-14));
}

TEST_CASE("q_sample scalar hand value") {
  NoiseSchedule sched = linear_schedule(4, 0.1, 0.4);
  ModalityStack xt = q_sample(scalar_stack(1.0), 2, scalar_stack(1.0), sched);
  CHECK(xt.data[0] == doctest::Approx(std::sqrt(0.72) + std::sqrt(0.28)).epsilon(1e-12));
  CHECK(xt.data[0] == doctest::Approx(1.37768).epsilon(1e-5));
}

TEST_CASE("q_sample validates inputs") {
  NoiseSchedule sched = linear_schedule(4, 0.1, 0.4);
  CHECK_THROWS_AS(q_sample(scalar_stack(1.0), 5, scalar_stack(0.0), sched),
                  std::invalid_argument);
  CHECK_THROWS_AS(q_sample(scalar_stack(1.0), 0, scalar_stack(0.0), sched),
                  std::invalid_argument);
  ModalityStack wide({"m"}, 1, 2);
  CHECK_THROWS_AS(q_sample(scalar_stack(1.0), 2, wide, sched), std::invalid_argument);
}

TEST_CASE("predict_x0 inverts q_sample") {
  NoiseSchedule sched = cosine_schedule(100);
  Rng rng(5);
  ModalityStack x0({"a", "b"}, 4, 4);
  rng.fill_normal(x0);
  for (int t : {1, 17, 50, 100}) {
    ModalityStack eps = rng.normal_like(x0);
    ModalityStack xt = q_sample(x0, t, eps, sched);
    ModalityStack rec = predict_x0(xt, t, eps, sched);
    for (std::size_t i = 0; i < x0.data.size(); ++i)
      CHECK(rec.data[i] == doctest::Approx(x0.data[i]).epsilon(1e-10));
  }
}

TEST_CASE("predict_x0 degenerate and hand values") {
  NoiseSchedule sched = linear_schedule(4, 0.1, 0.4);
  ModalityStack xt = scalar_stack(1.2);
  ModalityStack rec = predict_x0(xt, 2, scalar_stack(0.0), sched);
  CHECK(rec.data[0] == doctest::Approx(1.2 / std::sqrt(0.72)).epsilon(1e-14));
  ModalityStack rec2 = predict_x0(scalar_stack(std::sqrt(0.72) + std::sqrt(0.28)), 2,
                                  scalar_stack(1.0), sched);
  CHECK(rec2.data[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("posterior std convention") {
  NoiseSchedule sched = linear_schedule(4, 0.1, 0.4);
  CHECK(sched.posterior_std(1) == 0.0);
  CHECK(sched.posterior_std(2) ==
        doctest::Approx(std::sqrt((1.0 - 0.9) / (1.0 - 0.72) * 0.2)).epsilon(1e-14));
  CHECK(sched.posterior_std(2) == doctest::Approx(0.26726).epsilon(1e-4));
}

TEST_CASE("closed form matches chained single-step transitions") {
  // x_t from q(x_t | x_{t-1}) chained t times vs the closed-form marginal
  const int T = 10;
  NoiseSchedule sched = linear_schedule(T, 0.02, 0.3);
  const double x0 = 0.7;
  const int trials = 10000;
  Rng rng(99);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < trials; ++i) {
    double x = x0;
    for (int t = 1; t <= T; ++t) x = std::sqrt(1.0 - sched.beta(t)) * x +
                                     std::sqrt(sched.beta(t)) * rng.normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / trials;
  const double var = sum2 / trials - mean * mean;
  const double abar = sched.alpha_bar(T);
  const double want_mean = std::sqrt(abar) * x0;
  const double want_var = 1.0 - abar;
  const double se_mean = std::sqrt(want_var / trials);
  const double se_var = want_var * std::sqrt(2.0 / trials);
  CHECK(std::abs(mean - want_mean) <= 3.0 * se_mean);
  CHECK(std::abs(var - want_var) <= 3.0 * se_var);
}
