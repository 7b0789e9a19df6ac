#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "a2a/data.hpp"
#include "a2a/denoiser.hpp"
#include "a2a/samplers.hpp"
#include "a2a/schedule.hpp"

namespace a2a {

struct DatasetConfig {
  std::string path;
  PhantomConfig phantom;
  int train_count = 512;
  int val_count = 16;
  int test_count = 16;
  std::map<std::string, NormalizationMode> normalization;  // default PerSample

  NormalizationPolicy policy() const;
};

struct ScheduleConfig {
  enum class Kind { Cosine, Linear };
  Kind kind = Kind::Cosine;
  int timesteps = 1000;
  double s = 0.008;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  NoiseSchedule build() const;
};

struct ModelConfig {
  int width = 32;
  int embed_dim = 64;
  TrainConfig train;
};

struct MeasuredParams {
  int accel = 4;
  int acs = 0;
  int n_coils = 8;
  double r = 1.5;
  double sigma = 0.01;
};

struct TaskEntry {
  enum class Kind { Clean, Missing, Measured };
  Kind kind = Kind::Missing;
  MeasuredParams measured;
};

struct SamplerConfig {
  enum class Kind { Mps, Mds };
  Kind kind = Kind::Mds;
  MpsConfig mps;
  MdsConfig mds;
};

struct EvalConfig {
  double data_range = 1.0;
  int ssim_window = 7;
};

/// Strictly parsed run configuration: unknown keys anywhere are an error.
struct RunConfig {
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  ScheduleConfig schedule;
  ModelConfig model;
  std::map<std::string, TaskEntry> task;  // keyed by modality name
  SamplerConfig sampler;
  EvalConfig eval;

  static RunConfig parse_file(const std::string& path);
  static RunConfig parse_text(const std::string& json_text);
};

}  // namespace a2a
