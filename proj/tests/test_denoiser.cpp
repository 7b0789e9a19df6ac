#include <doctest.h>

#include <cmath>
#include <fstream>
#include <vector>

#include "a2a/denoiser.hpp"
#include "a2a/rng.hpp"
#include "a2a/schedule.hpp"

using namespace a2a;

namespace {

ModalityStack scalar_stack(double v) {
  ModalityStack s({"m"}, 1, 1);
  s.data[0] = v;
  return s;
}

ModalityStack filled(std::vector<std::string> ids, int h, int w, double v) {
  ModalityStack s(std::move(ids), h, w);
  std::fill(s.data.begin(), s.data.end(), v);
  return s;
}

double rel_err(const ModalityStack& a, const ModalityStack& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    num += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    den += b.data[i] * b.data[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-30);
}

}  // namespace

TEST_CASE("delta prior gives the pure-mean epsilon") {
  NoiseSchedule sched = linear_schedule(4, 0.1, 0.4);
  GaussianAnalyticDenoiser den(scalar_stack(0.3), scalar_stack(0.0), sched);
  const double xt = 1.1;
  ModalityStack eps = den.predict(scalar_stack(xt), 2);
  const double abar = 0.72;
  CHECK(eps.data[0] ==
        doctest::Approx((xt - std::sqrt(abar) * 0.3) / std::sqrt(1.0 - abar)).epsilon(1e-14));
}

TEST_CASE("standard normal prior gives eps = sqrt(1-abar) x") {
  NoiseSchedule sched = linear_schedule(4, 0.1, 0.4);
  GaussianAnalyticDenoiser den(scalar_stack(0.0), scalar_stack(1.0), sched);
  const double xt = -0.8;
  ModalityStack eps = den.predict(scalar_stack(xt), 2);
  CHECK(eps.data[0] == doctest::Approx(std::sqrt(1.0 - 0.72) * xt).epsilon(1e-14));
}

TEST_CASE("gaussian vjp matches central finite differences") {
  NoiseSchedule sched = cosine_schedule(50);
  Rng rng(12);
  ModalityStack mu({"a", "b"}, 2, 2);
  rng.fill_normal(mu);
  ModalityStack var = mu;
  for (double& v : var.data) v = 0.1 + std::abs(v);
  GaussianAnalyticDenoiser den(mu, var, sched);
  ModalityStack x = rng.normal_like(mu);
  ModalityStack cot = rng.normal_like(mu);
  const int t = 20;
  ModalityStack g = den.vjp(x, t, cot);
  const double h = 1e-6;
  for (std::size_t k = 0; k < x.data.size(); ++k) {
    ModalityStack xp = x, xm = x;
    xp.data[k] += h;
    xm.data[k] -= h;
    const double fp = dot(cot, den.predict(xp, t));
    const double fm = dot(cot, den.predict(xm, t));
    CHECK(g.data[k] == doctest::Approx((fp - fm) / (2.0 * h)).epsilon(1e-5));
  }
}

TEST_CASE("dense gaussian reduces to the diagonal one for diagonal covariance") {
  NoiseSchedule sched = cosine_schedule(30);
  Rng rng(13);
  ModalityStack mu({"a", "b"}, 1, 2);
  rng.fill_normal(mu);
  ModalityStack var = mu;
  for (double& v : var.data) v = 0.2 + std::abs(v);
  const int d = static_cast<int>(mu.data.size());
  std::vector<double> cov(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) cov[i * d + i] = var.data[i];
  GaussianAnalyticDenoiser diag(mu, var, sched);
  DenseGaussianDenoiser dense(mu, cov, sched);
  ModalityStack x = rng.normal_like(mu);
  for (int t : {1, 15, 30}) {
    ModalityStack a = diag.predict(x, t);
    ModalityStack b = dense.predict(x, t);
    for (std::size_t i = 0; i < a.data.size(); ++i)
      CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-10));
    ModalityStack cot = rng.normal_like(mu);
    ModalityStack va = diag.vjp(x, t, cot);
    ModalityStack vb = dense.vjp(x, t, cot);
    for (std::size_t i = 0; i < va.data.size(); ++i)
      CHECK(va.data[i] == doctest::Approx(vb.data[i]).epsilon(1e-10));
  }
}

TEST_CASE("dense gaussian vjp matches finite differences on a correlated prior") {
  NoiseSchedule sched = cosine_schedule(40);
  ModalityStack mu({"a", "b"}, 1, 1);
  mu.data = {0.4, 0.6};
  std::vector<double> cov = {1.0, 0.8, 0.8, 1.0};
  DenseGaussianDenoiser den(mu, cov, sched);
  Rng rng(14);
  ModalityStack x = rng.normal_like(mu);
  ModalityStack cot = rng.normal_like(mu);
  const int t = 25;
  ModalityStack g = den.vjp(x, t, cot);
  const double h = 1e-6;
  for (std::size_t k = 0; k < 2; ++k) {
    ModalityStack xp = x, xm = x;
    xp.data[k] += h;
    xm.data[k] -= h;
    const double fd =
        (dot(cot, den.predict(xp, t)) - dot(cot, den.predict(xm, t))) / (2.0 * h);
    CHECK(g.data[k] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("optimal predictor loss equals the conditional variance of eps") {
  // scalar standard-normal prior: Var(eps | x_t) = abar_t
  NoiseSchedule sched = linear_schedule(4, 0.1, 0.4);
  GaussianAnalyticDenoiser den(scalar_stack(0.0), scalar_stack(1.0), sched);
  Rng rng(15);
  const int t = 2, trials = 20000;
  double mse = 0.0;
  for (int i = 0; i < trials; ++i) {
    const double x0 = rng.normal();
    const double e = rng.normal();
    ModalityStack xt = q_sample(scalar_stack(x0), t, scalar_stack(e), sched);
    const double ehat = den.predict(xt, t).data[0];
    mse += (e - ehat) * (e - ehat);
  }
  mse /= trials;
  const double want = 0.72;  // abar_2
  CHECK(std::abs(mse - want) < 3.0 * want * std::sqrt(2.0 / trials));
}

TEST_CASE("conv denoiser with zero weights returns zero") {
  ConvDenoiser den(ConvArch{2, 8, 16});
  ModalityStack x = filled({"a", "b"}, 8, 8, 0.7);
  ModalityStack out = den.predict(x, 3);
  for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("conv denoiser is fully convolutional and deterministic") {
  ConvDenoiser den = ConvDenoiser::random_init(ConvArch{3, 8, 16}, 77);
  Rng rng(16);
  for (int hw : {32, 64}) {
    ModalityStack x({"a", "b", "c"}, hw, hw);
    rng.fill_normal(x);
    ModalityStack out = den.predict(x, 5);
    CHECK(out.h == hw);
    CHECK(out.w == hw);
    CHECK(out.n() == 3);
    ModalityStack again = den.predict(x, 5);
    CHECK(out.data == again.data);  // bitwise
  }
}

TEST_CASE("conv denoiser channel mismatch is rejected") {
  ConvDenoiser den(ConvArch{2, 4, 8});
  ModalityStack x({"a"}, 8, 8);
  CHECK_THROWS_AS(den.predict(x, 1), std::invalid_argument);
}

TEST_CASE("conv vjp is linear in the cotangent and zero at zero") {
  ConvDenoiser den = ConvDenoiser::random_init(ConvArch{2, 6, 8}, 5);
  Rng rng(17);
  ModalityStack x({"a", "b"}, 8, 8);
  rng.fill_normal(x);
  ModalityStack zero = zeros_like(x);
  ModalityStack gz = den.vjp(x, 3, zero);
  for (double v : gz.data) CHECK(v == 0.0);
  ModalityStack u = rng.normal_like(x), v = rng.normal_like(x);
  const double a = 1.7, b = -0.4;
  ModalityStack lin = add(scale(u, a), scale(v, b));
  ModalityStack lhs = den.vjp(x, 3, lin);
  ModalityStack rhs = add(scale(den.vjp(x, 3, u), a), scale(den.vjp(x, 3, v), b));
  for (std::size_t i = 0; i < lhs.data.size(); ++i)
    CHECK(lhs.data[i] == doctest::Approx(rhs.data[i]).epsilon(1e-11));
}

TEST_CASE("conv vjp matches central finite differences") {
  // small instance, well under 1e4 parameters
  ConvDenoiser den = ConvDenoiser::random_init(ConvArch{2, 8, 16}, 123);
  CHECK(den.param_count() < 10000);
  Rng rng(18);
  ModalityStack x({"a", "b"}, 8, 8);
  rng.fill_normal(x);
  const int t = 7;
  for (int trial = 0; trial < 3; ++trial) {
    ModalityStack cot = rng.normal_like(x);
    ModalityStack g = den.vjp(x, t, cot);
    ModalityStack fd = zeros_like(x);
    const double h = 1e-5;
    for (std::size_t k = 0; k < x.data.size(); ++k) {
      ModalityStack xp = x, xm = x;
      xp.data[k] += h;
      xm.data[k] -= h;
      fd.data[k] = (dot(cot, den.predict(xp, t)) - dot(cot, den.predict(xm, t))) / (2.0 * h);
    }
    CHECK(rel_err(g, fd) < 1e-6);
  }
}

TEST_CASE("predict_with_vjp agrees with the separate calls") {
  ConvDenoiser den = ConvDenoiser::random_init(ConvArch{2, 6, 8}, 9);
  Rng rng(19);
  ModalityStack x({"a", "b"}, 8, 8);
  rng.fill_normal(x);
  ModalityStack cot = rng.normal_like(x);
  auto pred = den.predict_with_vjp(x, 4);
  ModalityStack eps = den.predict(x, 4);
  ModalityStack g = den.vjp(x, 4, cot);
  CHECK(pred.eps.data == eps.data);
  CHECK(pred.vjp(cot).data == g.data);
}

TEST_CASE("lr = 0 leaves weights untouched") {
  ConvArch arch{1, 4, 8};
  ConvDenoiser den = ConvDenoiser::random_init(arch, 3);
  NoiseSchedule sched = linear_schedule(4, 0.1, 0.4);
  Rng rng(20);
  ModalityStack x0({"a"}, 8, 8);
  rng.fill_normal(x0);
  std::vector<ModalityStack> ds = {x0};
  std::vector<double> before(den.params().begin(), den.params().end());
  TrainConfig cfg;
  cfg.iterations = 5;
  cfg.batch_size = 2;
  cfg.lr = 0.0;
  cfg.seed = 4;
  cfg.log_every = 0;
  std::vector<double> trace = train(den, ds, sched, cfg);
  CHECK(trace.size() == 5);
  std::vector<double> after(den.params().begin(), den.params().end());
  CHECK(before == after);
}

TEST_CASE("training on one sample with a one-step schedule drives the loss down") {
  ConvArch arch{1, 8, 16};
  ConvDenoiser den = ConvDenoiser::random_init(arch, 11);
  NoiseSchedule sched = linear_schedule(1, 0.5, 0.5);  // fixed t = 1
  Rng rng(21);
  ModalityStack x0({"a"}, 16, 16);
  for (double& v : x0.data) v = 0.5 + 0.3 * rng.normal();
  std::vector<ModalityStack> ds = {x0};
  TrainConfig cfg;
  cfg.iterations = 400;
  cfg.batch_size = 4;
  cfg.lr = 3e-3;
  cfg.seed = 22;
  cfg.log_every = 0;
  std::vector<double> trace = train(den, ds, sched, cfg);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 100; ++i) head += trace[i];
  for (int i = 300; i < 400; ++i) tail += trace[i];
  CHECK(tail < head);
}

TEST_CASE("train validates inputs") {
  ConvDenoiser den(ConvArch{2, 4, 8});
  NoiseSchedule sched = linear_schedule(2, 0.1, 0.2);
  TrainConfig cfg;
  std::vector<ModalityStack> empty;
  CHECK_THROWS_AS(train(den, empty, sched, cfg), std::invalid_argument);
  std::vector<ModalityStack> wrong = {ModalityStack({"a"}, 4, 4)};
  CHECK_THROWS_AS(train(den, wrong, sched, cfg), std::invalid_argument);
}

TEST_CASE("weights round-trip through the A2AW file") {
  ConvDenoiser den = ConvDenoiser::random_init(ConvArch{3, 8, 16}, 4242);
  const std::string path = "/tmp/a2a_test_weights.bin";
  save_weights(path, den);
  ConvDenoiser back = load_weights(path);
  CHECK(back.arch() == den.arch());
  CHECK(back.init_seed() == den.init_seed());
  CHECK(std::equal(back.params().begin(), back.params().end(), den.params().begin()));
  // corrupt the magic
  {
    std::ofstream os(path, std::ios::binary);
    os.write("XXXX", 4);
  }
  CHECK_THROWS_AS(load_weights(path), std::runtime_error);
}
