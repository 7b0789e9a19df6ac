#include "a2a/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace a2a {

namespace {

struct Ellipse {
  double cy, cx, a, b, theta, value;
};

void render_ellipse(std::vector<double>& img, int h, int w, const Ellipse& e) {
  const double ct = std::cos(e.theta), st = std::sin(e.theta);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dy = y - e.cy, dx = x - e.cx;
      const double u = (dx * ct + dy * st) / e.a;
      const double v = (-dx * st + dy * ct) / e.b;
      if (u * u + v * v <= 1.0) img[static_cast<std::size_t>(y) * w + x] += e.value;
    }
  }
}

Ellipse draw_ellipse(Rng& rng, int h, int w, double center_frac, double ax_lo, double ax_hi,
                     double val_lo, double val_hi) {
  const double m = std::min(h, w);
  Ellipse e;
  e.cy = h / 2.0 + (rng.uniform() - 0.5) * center_frac * h;
  e.cx = w / 2.0 + (rng.uniform() - 0.5) * center_frac * w;
  e.a = (ax_lo + (ax_hi - ax_lo) * rng.uniform()) * m;
  e.b = (ax_lo + (ax_hi - ax_lo) * rng.uniform()) * m;
  e.theta = rng.uniform() * std::numbers::pi;
  e.value = val_lo + (val_hi - val_lo) * rng.uniform();
  return e;
}

double apply_piecewise(const std::vector<double>& knots, double v) {
  const int k = static_cast<int>(knots.size());
  if (k == 0) return v;  // identity map
  if (k == 1) return knots[0];
  v = std::clamp(v, 0.0, 1.0);
  const double pos = v * (k - 1);
  const int i = std::min(static_cast<int>(pos), k - 2);
  const double f = pos - i;
  return knots[i] + f * (knots[i + 1] - knots[i]);
}

std::vector<std::vector<double>> default_intensity_maps(int n_modalities, std::uint64_t seed) {
  // fixed sub-stream so maps are a property of the config, not of the sample
  Rng rng(Rng::mix(seed, 0x6d617073));
  std::vector<std::vector<double>> maps(n_modalities);
  for (auto& map : maps) {
    const int k = 5;
    map.assign(k, 0.0);
    double total = 0.0;
    std::vector<double> inc(k - 1);
    for (double& d : inc) {
      d = 0.2 + 0.8 * rng.uniform();
      total += d;
    }
    double acc = 0.0;
    for (int i = 1; i < k; ++i) {
      acc += inc[i - 1] / total;
      map[i] = acc;  // map[0] == 0, map[k-1] == 1, nondecreasing
    }
  }
  return maps;
}

}  // namespace

ModalityStack gen_phantom_stack(const PhantomConfig& cfg, Rng& rng) {
  if (cfg.h < 16 || cfg.w < 16)
    throw std::invalid_argument("gen_phantom_stack: dims must be >= 16");
  if (cfg.n_shared_ellipses < 0 || cfg.n_unique_ellipses < 0)
    throw std::invalid_argument("gen_phantom_stack: negative ellipse count");
  const int n = static_cast<int>(cfg.modalities.size());
  const std::size_t hw = static_cast<std::size_t>(cfg.h) * cfg.w;

  std::vector<std::vector<double>> maps = cfg.intensity_maps;
  if (maps.empty()) maps = default_intensity_maps(n, cfg.seed);
  if (static_cast<int>(maps.size()) != n)
    throw std::invalid_argument("gen_phantom_stack: one intensity map per modality required");

  // shared structure: head ellipse plus interior detail, same in every modality
  std::vector<double> base(hw, 0.0);
  Ellipse head;
  head.cy = cfg.h / 2.0 + (rng.uniform() - 0.5) * 0.04 * cfg.h;
  head.cx = cfg.w / 2.0 + (rng.uniform() - 0.5) * 0.04 * cfg.w;
  head.a = (0.32 + 0.06 * rng.uniform()) * cfg.h;
  head.b = (0.32 + 0.06 * rng.uniform()) * cfg.w;
  head.theta = 0.0;
  head.value = 0.25;
  render_ellipse(base, cfg.h, cfg.w, head);
  for (int e = 0; e < cfg.n_shared_ellipses; ++e)
    render_ellipse(base, cfg.h, cfg.w,
                   draw_ellipse(rng, cfg.h, cfg.w, 0.45, 0.04, 0.18, -0.2, 0.6));
  for (double& v : base) v = std::clamp(v, 0.0, 1.0);

  ModalityStack stack(cfg.modalities, cfg.h, cfg.w);
  for (int i = 0; i < n; ++i) {
    auto plane = stack.plane(i);
    for (std::size_t p = 0; p < hw; ++p) plane[p] = apply_piecewise(maps[i], base[p]);
    std::vector<double> uniq(hw, 0.0);
    for (int e = 0; e < cfg.n_unique_ellipses; ++e) {
      Ellipse el = draw_ellipse(rng, cfg.h, cfg.w, 0.5, 0.02, 0.08, 0.1, 0.3);
      if (rng.uniform() < 0.5) el.value = -el.value;
      render_ellipse(uniq, cfg.h, cfg.w, el);
    }
    for (std::size_t p = 0; p < hw; ++p) plane[p] = std::clamp(plane[p] + uniq[p], 0.0, 1.0);
  }
  return stack;
}

// -- dataset file -------------------------------------------------------------

namespace {

constexpr std::uint32_t kDatasetVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("dataset file: truncated header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

static_assert(std::endian::native == std::endian::little,
              "f32 payload is written in native little-endian order");

}  // namespace

void save_dataset(const std::string& path, const Dataset& d) {
  for (const auto& s : d.samples) {
    if (s.h != d.h || s.w != d.w || s.n() != d.n_modalities())
      throw std::invalid_argument("save_dataset: sample shape mismatch");
    for (double v : s.data)
      if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument("save_dataset: values must lie in [0,1]");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_dataset: cannot open " + path);
  os.write("A2AD", 4);
  write_u32(os, kDatasetVersion);
  write_u32(os, static_cast<std::uint32_t>(d.n_modalities()));
  for (const auto& name : d.modalities) {
    write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  write_u32(os, static_cast<std::uint32_t>(d.h));
  write_u32(os, static_cast<std::uint32_t>(d.w));
  write_u32(os, static_cast<std::uint32_t>(d.count()));
  std::vector<float> buf;
  for (const auto& s : d.samples) {
    buf.resize(s.data.size());
    for (std::size_t i = 0; i < s.data.size(); ++i) buf[i] = static_cast<float>(s.data[i]);
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!os) throw std::runtime_error("save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_dataset: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "A2AD", 4) != 0)
    throw std::runtime_error("load_dataset: bad magic");
  if (read_u32(is) != kDatasetVersion) throw std::runtime_error("load_dataset: version mismatch");
  Dataset d;
  const std::uint32_t n = read_u32(is);
  d.modalities.resize(n);
  for (auto& name : d.modalities) {
    const std::uint32_t len = read_u32(is);
    name.resize(len);
    is.read(name.data(), len);
    if (!is) throw std::runtime_error("load_dataset: truncated header");
  }
  d.h = static_cast<int>(read_u32(is));
  d.w = static_cast<int>(read_u32(is));
  const std::uint32_t count = read_u32(is);
  const std::size_t plane = static_cast<std::size_t>(d.h) * d.w;
  std::vector<float> buf(static_cast<std::size_t>(n) * plane);
  d.samples.reserve(count);
  for (std::uint32_t s = 0; s < count; ++s) {
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (static_cast<std::size_t>(is.gcount()) != buf.size() * sizeof(float))
      throw std::runtime_error("load_dataset: truncated payload");
    ModalityStack stack(d.modalities, d.h, d.w);
    for (std::size_t i = 0; i < buf.size(); ++i) stack.data[i] = static_cast<double>(buf[i]);
    d.samples.push_back(std::move(stack));
  }
  return d;
}

// -- normalization ------------------------------------------------------------

NormalizationParams compute_normalization(const Dataset& train,
                                          const NormalizationPolicy& policy) {
  if (policy.modes.size() != static_cast<std::size_t>(train.n_modalities()))
    throw std::invalid_argument("compute_normalization: one mode per modality required");
  NormalizationParams params;
  params.per_modality.resize(policy.modes.size());
  for (std::size_t m = 0; m < policy.modes.size(); ++m) {
    params.per_modality[m].mode = policy.modes[m];
    if (policy.modes[m] != NormalizationMode::Group) continue;
    if (train.samples.empty())
      throw std::invalid_argument("compute_normalization: Group mode needs a training split");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : train.samples)
      for (double v : s.plane(static_cast<int>(m))) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    params.per_modality[m].lo = lo;
    params.per_modality[m].hi = hi;
  }
  return params;
}

void apply_normalization(Dataset& d, const NormalizationParams& params) {
  if (params.per_modality.size() != static_cast<std::size_t>(d.n_modalities()))
    throw std::invalid_argument("apply_normalization: parameter/modality count mismatch");
  for (auto& s : d.samples) {
    for (int m = 0; m < d.n_modalities(); ++m) {
      auto plane = s.plane(m);
      const auto& pm = params.per_modality[m];
      double lo = pm.lo, hi = pm.hi;
      if (pm.mode == NormalizationMode::PerSample) {
        lo = *std::min_element(plane.begin(), plane.end());
        hi = *std::max_element(plane.begin(), plane.end());
      }
      if (hi <= lo) {
        std::fill(plane.begin(), plane.end(), 0.0);  // constant image convention
        continue;
      }
      const double inv = 1.0 / (hi - lo);
      for (double& v : plane) v = std::clamp((v - lo) * inv, 0.0, 1.0);
    }
  }
}

// -- metrics ------------------------------------------------------------------

double psnr(std::span<const double> ref, std::span<const double> est, double data_range) {
  if (ref.size() != est.size()) throw std::invalid_argument("psnr: shape mismatch");
  if (!(data_range > 0.0)) throw std::invalid_argument("psnr: data_range must be positive");
  double mse = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref[i] - est[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ref.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / mse);
}

double ssim(std::span<const double> ref, std::span<const double> est, int h, int w,
            const SsimParams& params) {
  if (ref.size() != est.size() || ref.size() != static_cast<std::size_t>(h) * w)
    throw std::invalid_argument("ssim: shape mismatch");
  const int win = params.window;
  if (h < win || w < win) throw std::invalid_argument("ssim: image smaller than window");
  const double c1 = params.k1 * params.data_range * params.k1 * params.data_range;
  const double c2 = params.k2 * params.data_range * params.k2 * params.data_range;

  // summed-area tables over x, y, x^2, y^2, xy
  const int sw = w + 1;
  auto sat = [&](std::vector<double>& t, auto&& f) {
    t.assign(static_cast<std::size_t>(h + 1) * sw, 0.0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        t[static_cast<std::size_t>(y + 1) * sw + x + 1] =
            f(static_cast<std::size_t>(y) * w + x) + t[static_cast<std::size_t>(y) * sw + x + 1] +
            t[static_cast<std::size_t>(y + 1) * sw + x] - t[static_cast<std::size_t>(y) * sw + x];
  };
  std::vector<double> sx, sy, sxx, syy, sxy;
  sat(sx, [&](std::size_t i) { return ref[i]; });
  sat(sy, [&](std::size_t i) { return est[i]; });
  sat(sxx, [&](std::size_t i) { return ref[i] * ref[i]; });
  sat(syy, [&](std::size_t i) { return est[i] * est[i]; });
  sat(sxy, [&](std::size_t i) { return ref[i] * est[i]; });
  auto box = [&](const std::vector<double>& t, int y, int x) {
    return t[static_cast<std::size_t>(y + win) * sw + x + win] -
           t[static_cast<std::size_t>(y) * sw + x + win] -
           t[static_cast<std::size_t>(y + win) * sw + x] + t[static_cast<std::size_t>(y) * sw + x];
  };

  const double inv_n = 1.0 / (static_cast<double>(win) * win);
  double total = 0.0;
  int count = 0;
  for (int y = 0; y + win <= h; ++y) {
    for (int x = 0; x + win <= w; ++x) {
      const double mx = box(sx, y, x) * inv_n;
      const double my = box(sy, y, x) * inv_n;
      const double vx = box(sxx, y, x) * inv_n - mx * mx;
      const double vy = box(syy, y, x) * inv_n - my * my;
      const double cxy = box(sxy, y, x) * inv_n - mx * my;
      const double num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
      const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
      total += num / den;
      ++count;
    }
  }
  return total / count;
}

void write_pgm(const std::string& path, std::span<const double> plane, int h, int w) {
  if (plane.size() != static_cast<std::size_t>(h) * w)
    throw std::invalid_argument("write_pgm: shape mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_pgm: cannot open " + path);
  os << "P5\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> buf(plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i)
    buf[i] = static_cast<unsigned char>(std::lround(std::clamp(plane[i], 0.0, 1.0) * 255.0));
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw std::runtime_error("write_pgm: write failed for " + path);
}

}  // namespace a2a
