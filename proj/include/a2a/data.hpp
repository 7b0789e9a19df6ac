#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "a2a/core.hpp"
#include "a2a/rng.hpp"

namespace a2a {

/// Synthetic multimodal phantom generator. Shared ellipses model common
/// anatomy across modalities; per-modality monotone intensity maps and small
/// unique ellipses give each contrast its own profile.
struct PhantomConfig {
  int h = 64;
  int w = 64;
  std::vector<std::string> modalities = {"T1", "T2FLAIR", "T2STAR", "CT", "PET"};
  int n_shared_ellipses = 6;
  int n_unique_ellipses = 2;  // per modality
  /// Values of each modality's piecewise-linear map at uniform knots over
  /// [0,1]; first entry 0, nondecreasing. Empty: maps are derived
  /// deterministically from `seed`.
  std::vector<std::vector<double>> intensity_maps;
  std::uint64_t seed = 0;
};

/// One phantom stack; identical shared structure in every modality, then the
/// modality's intensity map and unique ellipses. Output clamped to [0,1].
ModalityStack gen_phantom_stack(const PhantomConfig& cfg, Rng& rng);

struct Dataset {
  std::vector<std::string> modalities;
  int h = 0;
  int w = 0;
  std::vector<ModalityStack> samples;

  int n_modalities() const { return static_cast<int>(modalities.size()); }
  int count() const { return static_cast<int>(samples.size()); }
};

/// "A2AD" dataset file: little-endian header (version, modality names, H, W,
/// sample count) followed by 32-bit float planes in [0,1], modality-major per
/// sample.
void save_dataset(const std::string& path, const Dataset& d);
Dataset load_dataset(const std::string& path);

enum class NormalizationMode { PerSample, Group };

struct NormalizationPolicy {
  std::vector<NormalizationMode> modes;  // one per modality
};

struct NormalizationParams {
  struct PerModality {
    NormalizationMode mode = NormalizationMode::PerSample;
    double lo = 0.0;  // Group affine parameters from the training split
    double hi = 1.0;
  };
  std::vector<PerModality> per_modality;
};

/// Group parameters are computed once from the training split and then
/// applied unchanged to any split.
NormalizationParams compute_normalization(const Dataset& train, const NormalizationPolicy& policy);
void apply_normalization(Dataset& d, const NormalizationParams& params);

/// 10 log10(data_range^2 / MSE); +infinity when est == ref.
double psnr(std::span<const double> ref, std::span<const double> est, double data_range);

struct SsimParams {
  int window = 7;  // uniform square window
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Mean local SSIM over fully interior windows, population statistics.
double ssim(std::span<const double> ref, std::span<const double> est, int h, int w,
            const SsimParams& params = {});

/// Binary 8-bit PGM (values clamped to [0,1] then scaled to 255).
void write_pgm(const std::string& path, std::span<const double> plane, int h, int w);

}  // namespace a2a
