#include "a2a/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace a2a {

bool TaskSpec::all_missing() const {
  return std::all_of(status.begin(), status.end(),
                     [](ModalityStatus s) { return s == ModalityStatus::Missing; });
}

bool TaskSpec::all_clean() const {
  return std::all_of(status.begin(), status.end(),
                     [](ModalityStatus s) { return s == ModalityStatus::Clean; });
}

TaskSpec compile_task(std::vector<std::string> ids, int h, int w,
                      const std::vector<TaskInput>& inputs) {
  if (ids.size() != inputs.size())
    throw std::invalid_argument("compile_task: ids/inputs length mismatch");
  TaskSpec task;
  task.ids = std::move(ids);
  task.h = h;
  task.w = w;
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (const auto& in : inputs) {
    if (const auto* clean = std::get_if<TaskInputClean>(&in)) {
      if (clean->image.size() != hw)
        throw std::invalid_argument("compile_task: clean image dims mismatch");
      task.status.push_back(ModalityStatus::Clean);
      task.op.specs.push_back(IdentityOp{});
      ImagePayload p;
      p.h = h;
      p.w = w;
      p.data = clean->image;
      task.y.payloads.push_back(std::move(p));
    } else if (std::holds_alternative<TaskInputMissing>(in)) {
      task.status.push_back(ModalityStatus::Missing);
      task.op.specs.push_back(ZeroOp{});
      task.y.payloads.push_back(EmptyPayload{});
    } else {
      const auto& m = std::get<TaskInputMeasured>(in);
      if (m.op.csms.h != h || m.op.csms.w != w || m.op.mask.w != w)
        throw std::invalid_argument("compile_task: measured operator dims mismatch");
      if (m.data.h != h || m.data.w != w || m.data.n_coils != m.op.csms.n_coils)
        throw std::invalid_argument("compile_task: measured payload dims mismatch");
      task.status.push_back(ModalityStatus::Measured);
      task.op.specs.push_back(m.op);
      task.y.payloads.push_back(m.data);
    }
  }
  return task;
}

std::vector<int> sample_steps(int T, int num_steps) {
  if (num_steps < 1 || num_steps > T)
    throw std::invalid_argument("sample_steps: need 1 <= num_steps <= T");
  if (num_steps == 1) return {T};
  std::vector<int> steps(num_steps);
  for (int j = 0; j < num_steps; ++j)
    steps[j] = 1 + static_cast<int>(std::llround(static_cast<double>(j) * (T - 1) /
                                                 (num_steps - 1)));
  return steps;
}

CgResult cg_solve(const std::function<ModalityStack(const ModalityStack&)>& gram, double lambda,
                  const ModalityStack& rhs, const ModalityStack& x0, int iters, double tol) {
  if (lambda < 0.0) throw std::invalid_argument("cg_solve: lambda must be >= 0");
  auto system = [&](const ModalityStack& v) {
    ModalityStack out = gram(v);
    if (lambda != 0.0) axpy_inplace(out, lambda, v);
    return out;
  };
  CgResult res;
  res.x = x0;
  ModalityStack r = rhs;
  sub_inplace(r, system(res.x));
  ModalityStack p = r;
  double rs = dot(r, r);
  const double rhs_norm = stack_l2_norm(rhs);
  const double denom = rhs_norm > 0.0 ? rhs_norm : 1.0;
  res.rel_residual = std::sqrt(rs) / denom;
  for (int k = 0; k < iters && res.rel_residual > tol; ++k) {
    ModalityStack ap = system(p);
    const double pap = dot(p, ap);
    if (!std::isfinite(pap) || !std::isfinite(rs))
      throw std::runtime_error("cg_solve: non-finite values encountered");
    if (pap <= 0.0) break;  // reached the null space of a singular system
    const double alpha = rs / pap;
    axpy_inplace(res.x, alpha, p);
    axpy_inplace(r, -alpha, ap);
    const double rs_new = dot(r, r);
    const double beta = rs_new / rs;
    scale_inplace(p, beta);
    add_inplace(p, r);
    rs = rs_new;
    res.rel_residual = std::sqrt(rs) / denom;
    res.iterations = k + 1;
  }
  if (!std::isfinite(res.rel_residual))
    throw std::runtime_error("cg_solve: non-finite residual");
  return res;
}

namespace {

// Reverse transition t -> t_prev. For adjacent steps this is the textbook
// ancestral DDPM update; for gaps the effective alpha is abar_t / abar_prev.
ModalityStack ddpm_step_to(const ModalityStack& x, int t, int t_prev,
                           const ModalityStack& eps_hat, const NoiseSchedule& sched, Rng& rng) {
  const double abar_t = sched.alpha_bar(t);
  const double abar_prev = sched.alpha_bar(t_prev);
  const double a_eff = abar_t / abar_prev;
  const double beta_eff = 1.0 - a_eff;
  const double coef = beta_eff / std::sqrt(1.0 - abar_t);
  const double inv = 1.0 / std::sqrt(a_eff);
  ModalityStack out = x;
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = (x.data[i] - coef * eps_hat.data[i]) * inv;
  const double noise_std =
      std::sqrt((1.0 - abar_prev) / (1.0 - abar_t) * beta_eff);
  if (noise_std > 0.0)
    for (double& v : out.data) v += noise_std * rng.normal();
  return out;
}

// DDIM noise scale between subsequence points; reduces to eta * posterior_std(t)
// for adjacent steps.
double ddim_sigma(const NoiseSchedule& sched, int t, int t_prev, double eta) {
  const double abar_t = sched.alpha_bar(t);
  const double abar_prev = sched.alpha_bar(t_prev);
  return eta * std::sqrt((1.0 - abar_prev) / (1.0 - abar_t) * (1.0 - abar_t / abar_prev));
}

// Proximal correction of the clean estimate. Clean slices are replaced,
// Measured ones solve (A^T A + lambda I) x = A^T y + lambda x0_hat by CG.
ModalityStack mds_correct(const ModalityStack& x0_hat, const TaskSpec& task,
                          const MdsConfig& cfg, int t, SamplerLog* log) {
  ModalityStack out = x0_hat;
  for (int i = 0; i < task.n(); ++i) {
    switch (task.status[i]) {
      case ModalityStatus::Missing:
        break;
      case ModalityStatus::Clean: {
        const auto& img = std::get<ImagePayload>(task.y.payloads[i]);
        std::copy(img.data.begin(), img.data.end(), out.plane(i).begin());
        break;
      }
      case ModalityStatus::Measured: {
        const OperatorSpec& spec = task.op.specs[i];
        const double lambda = cfg.lambda_for(i);
        ModalityStack rhs({task.ids[i]}, task.h, task.w);
        adjoint_block(spec, task.h, task.w, task.y.payloads[i], rhs.plane(0).data());
        ModalityStack warm({task.ids[i]}, task.h, task.w);
        std::copy(x0_hat.plane(i).begin(), x0_hat.plane(i).end(), warm.plane(0).begin());
        if (lambda != 0.0) axpy_inplace(rhs, lambda, warm);
        auto gram = [&](const ModalityStack& v) {
          ModalityStack gv = zeros_like(v);
          gram_apply_block(spec, task.h, task.w, v.plane(0).data(), gv.plane(0).data());
          return gv;
        };
        CgResult sol = cg_solve(gram, lambda, rhs, warm, cfg.cg_iters, cfg.cg_tol);
        std::copy(sol.x.plane(0).begin(), sol.x.plane(0).end(), out.plane(i).begin());
        if (log) log->cg.push_back({t, i, sol.iterations, sol.rel_residual});
        break;
      }
    }
  }
  return out;
}

// Shared DDIM/MDS chain; task == nullptr is unconditional DDIM.
ModalityStack mds_core(const EpsilonPredictor& den, const NoiseSchedule& sched,
                       const TaskSpec* task, const MdsConfig& cfg, const ModalityStack& shape,
                       Rng& rng, SamplerLog* log) {
  if (cfg.eta < 0.0 || cfg.eta > 1.0)
    throw std::invalid_argument("mds: eta must lie in [0, 1]");
  const std::vector<int> steps = sample_steps(sched.T(), cfg.num_steps);
  ModalityStack x = rng.normal_like(shape);
  for (int j = static_cast<int>(steps.size()) - 1; j >= 0; --j) {
    const int t = steps[j];
    const int t_prev = j > 0 ? steps[j - 1] : 0;
    const ModalityStack eps_hat = den.predict(x, t);
    ModalityStack x0 = predict_x0(x, t, eps_hat, sched);
    if (task) x0 = mds_correct(x0, *task, cfg, t, log);
    if (t_prev == 0) return x0;
    const double abar_prev = sched.alpha_bar(t_prev);
    const double sigma = ddim_sigma(sched, t, t_prev, cfg.eta);
    const double radicand = 1.0 - abar_prev - sigma * sigma;
    if (radicand < 0.0)
      throw std::runtime_error("mds: negative DDIM radicand");
    const double sa = std::sqrt(abar_prev);
    const double se = std::sqrt(radicand);
    for (std::size_t i = 0; i < x.data.size(); ++i)
      x.data[i] = sa * x0.data[i] + se * eps_hat.data[i];
    if (sigma > 0.0)
      for (double& v : x.data) v += sigma * rng.normal();
  }
  return x;  // unreachable: the t_prev == 0 branch returns
}

}  // namespace

ModalityStack ddpm_sample(const EpsilonPredictor& den, const NoiseSchedule& sched,
                          const ModalityStack& shape, Rng& rng) {
  if (shape.n() != den.channels())
    throw std::invalid_argument("ddpm_sample: shape/denoiser channel mismatch");
  ModalityStack x = rng.normal_like(shape);
  for (int t = sched.T(); t >= 1; --t) {
    const ModalityStack eps_hat = den.predict(x, t);
    x = ddpm_step_to(x, t, t - 1, eps_hat, sched, rng);
  }
  return x;
}

ModalityStack ddim_sample(const EpsilonPredictor& den, const NoiseSchedule& sched,
                          const ModalityStack& shape, double eta, int num_steps, Rng& rng) {
  if (shape.n() != den.channels())
    throw std::invalid_argument("ddim_sample: shape/denoiser channel mismatch");
  MdsConfig cfg;
  cfg.num_steps = num_steps;
  cfg.eta = eta;
  return mds_core(den, sched, nullptr, cfg, shape, rng, nullptr);
}

ModalityStack mps_sample(const EpsilonPredictor& den, const NoiseSchedule& sched,
                         const TaskSpec& task, const MpsConfig& cfg, Rng& rng, SamplerLog* log) {
  if (task.all_missing())
    throw std::invalid_argument("mps_sample: all-Missing task; use unconditional sampling");
  if (task.n() != den.channels())
    throw std::invalid_argument("mps_sample: task/denoiser channel mismatch");
  if (cfg.zeta < 0.0) throw std::invalid_argument("mps_sample: zeta must be >= 0");
  const std::vector<int> steps = sample_steps(sched.T(), cfg.num_steps);
  const ModalityStack shape = task.shape_template();
  ModalityStack x = rng.normal_like(shape);
  for (int j = static_cast<int>(steps.size()) - 1; j >= 0; --j) {
    const int t = steps[j];
    const int t_prev = j > 0 ? steps[j - 1] : 0;
    if (cfg.zeta == 0.0) {
      // guidance off: exactly the unconditional chain
      const ModalityStack eps_hat = den.predict(x, t);
      x = ddpm_step_to(x, t, t_prev, eps_hat, sched, rng);
      continue;
    }
    auto pred = den.predict_with_vjp(x, t);
    ModalityStack x_next = ddpm_step_to(x, t, t_prev, pred.eps, sched, rng);

    const double abar_t = sched.alpha_bar(t);
    ModalityStack x0 = predict_x0(x, t, pred.eps, sched);
    ModalityStack x0_res = x0;
    if (cfg.clip_x0)
      for (double& v : x0_res.data) v = std::clamp(v, 0.0, 1.0);
    MeasurementVector r = measurement_sub(apply(task.op, x0_res), task.y);
    const double misfit = measurement_norm(r);
    ModalityStack u = zeros_like(x);
    for (int i = 0; i < task.n(); ++i)
      adjoint_block(task.op.specs[i], task.h, task.w, r.payloads[i], u.plane(i).data());
    scale_inplace(u, 2.0);
    if (cfg.clip_x0)
      for (std::size_t i = 0; i < u.data.size(); ++i)
        if (x0.data[i] < 0.0 || x0.data[i] > 1.0) u.data[i] = 0.0;
    // g = (u - sqrt(1-abar) J_eps^T u) / sqrt(abar)
    ModalityStack ju = pred.vjp(u);
    ModalityStack g = u;
    axpy_inplace(g, -std::sqrt(1.0 - abar_t), ju);
    scale_inplace(g, 1.0 / std::sqrt(abar_t));

    double zeta_t = cfg.zeta;
    bool skip = false;
    if (cfg.zeta_mode == MpsConfig::ZetaMode::Normalized) {
      if (misfit < 1e-12)
        skip = true;
      else
        zeta_t = cfg.zeta / misfit;
    }
    if (!skip) axpy_inplace(x_next, -zeta_t, g);
    if (log) log->guidance.push_back({t, misfit, stack_l2_norm(g)});
    x = x_next;
  }
  return x;
}

ModalityStack mds_sample(const EpsilonPredictor& den, const NoiseSchedule& sched,
                         const TaskSpec& task, const MdsConfig& cfg, Rng& rng, SamplerLog* log) {
  if (task.n() != den.channels())
    throw std::invalid_argument("mds_sample: task/denoiser channel mismatch");
  const ModalityStack shape = task.shape_template();
  // all-Missing is the unconditional task: plain DDIM
  return mds_core(den, sched, task.all_missing() ? nullptr : &task, cfg, shape, rng, log);
}

}  // namespace a2a
