#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "a2a/core.hpp"
#include "a2a/denoiser.hpp"
#include "a2a/operators.hpp"
#include "a2a/rng.hpp"
#include "a2a/schedule.hpp"

namespace a2a {

enum class ModalityStatus { Clean, Missing, Measured };

/// Task description compiled into the block operator A and measurements y.
/// Clean modalities compile to Identity blocks, Missing to Zero blocks,
/// Measured to their MRI forward model and acquired k-space.
struct TaskSpec {
  std::vector<std::string> ids;
  int h = 0, w = 0;
  std::vector<ModalityStatus> status;
  BlockDiagonalOperator op;
  MeasurementVector y;

  int n() const { return static_cast<int>(ids.size()); }
  bool all_missing() const;
  bool all_clean() const;
  ModalityStack shape_template() const { return ModalityStack(ids, h, w); }
};

struct TaskInputClean {
  std::vector<double> image;  // h*w
};
struct TaskInputMissing {};
struct TaskInputMeasured {
  MriCartesianOp op;
  KSpacePayload data;
};
using TaskInput = std::variant<TaskInputClean, TaskInputMissing, TaskInputMeasured>;

TaskSpec compile_task(std::vector<std::string> ids, int h, int w,
                      const std::vector<TaskInput>& inputs);

struct MpsConfig {
  int num_steps = 1000;
  double zeta = 1.0;
  enum class ZetaMode { Constant, Normalized };
  ZetaMode zeta_mode = ZetaMode::Normalized;
  bool clip_x0 = false;  // clamp x0_hat to [0,1] inside the guidance residual
};

struct MdsConfig {
  int num_steps = 150;
  double eta = 0.5;  // stochasticity in [0, 1]
  double lambda = 1.0;  // proximal weight for Measured modalities
  std::vector<double> lambda_per_modality;  // optional override, one entry per modality
  int cg_iters = 30;
  double cg_tol = 1e-8;

  double lambda_for(int modality) const {
    return lambda_per_modality.empty() ? lambda : lambda_per_modality.at(modality);
  }
};

/// Per-run diagnostics for the run manifest.
struct SamplerLog {
  struct CgRecord {
    int t;
    int modality;
    int iterations;
    double rel_residual;
  };
  struct GuidanceRecord {
    int t;
    double misfit_norm;
    double guidance_norm;
  };
  std::vector<CgRecord> cg;
  std::vector<GuidanceRecord> guidance;
};

struct CgResult {
  ModalityStack x;
  double rel_residual = 0.0;
  int iterations = 0;
};

/// Conjugate gradient on (gram + lambda I) x = rhs, warm-started from x0.
/// `gram` must be self-adjoint positive semidefinite. Stops at relative
/// residual <= tol or after `iters` iterations.
CgResult cg_solve(const std::function<ModalityStack(const ModalityStack&)>& gram, double lambda,
                  const ModalityStack& rhs, const ModalityStack& x0, int iters, double tol);

/// Ancestral DDPM sampling over the full schedule.
ModalityStack ddpm_sample(const EpsilonPredictor& den, const NoiseSchedule& sched,
                          const ModalityStack& shape, Rng& rng);

/// DDIM sampling over an evenly spaced step subsequence (endpoints included).
/// Deterministic when eta == 0.
ModalityStack ddim_sample(const EpsilonPredictor& den, const NoiseSchedule& sched,
                          const ModalityStack& shape, double eta, int num_steps, Rng& rng);

/// Posterior sampling guided by the gradient of the measurement misfit
/// ||y - A x0_hat||^2, subtracted from the ancestral DDPM update.
ModalityStack mps_sample(const EpsilonPredictor& den, const NoiseSchedule& sched,
                         const TaskSpec& task, const MpsConfig& cfg, Rng& rng,
                         SamplerLog* log = nullptr);

/// Decomposition sampling: proximal CG correction of x0_hat for Measured
/// modalities, direct slice replacement for Clean ones, DDIM recombination.
/// The returned stack is the corrected clean estimate of the final step.
/// An all-Missing task reduces to unconditional DDIM sampling.
ModalityStack mds_sample(const EpsilonPredictor& den, const NoiseSchedule& sched,
                         const TaskSpec& task, const MdsConfig& cfg, Rng& rng,
                         SamplerLog* log = nullptr);

/// Evenly spaced timestep subsequence of {1..T}: K points including T and,
/// for K >= 2, including 1; ascending order.
std::vector<int> sample_steps(int T, int num_steps);

}  // namespace a2a
