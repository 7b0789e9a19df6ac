#include "a2a/config.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace a2a {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) fail("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void get_if_present(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void parse_dataset(const json& j, DatasetConfig& out) {
  check_keys(j, "dataset",
             {"path", "h", "w", "modalities", "counts", "shared_ellipses", "unique_ellipses",
              "intensity_maps", "normalization"});
  get_if_present(j, "path", out.path);
  get_if_present(j, "h", out.phantom.h);
  get_if_present(j, "w", out.phantom.w);
  get_if_present(j, "modalities", out.phantom.modalities);
  if (out.phantom.modalities.empty()) fail("dataset.modalities must not be empty");
  if (j.contains("counts")) {
    const json& c = j.at("counts");
    check_keys(c, "dataset.counts", {"train", "val", "test"});
    get_if_present(c, "train", out.train_count);
    get_if_present(c, "val", out.val_count);
    get_if_present(c, "test", out.test_count);
    if (out.train_count < 0 || out.val_count < 0 || out.test_count < 0)
      fail("dataset counts must be >= 0");
  }
  get_if_present(j, "shared_ellipses", out.phantom.n_shared_ellipses);
  get_if_present(j, "unique_ellipses", out.phantom.n_unique_ellipses);
  if (j.contains("intensity_maps")) {
    const json& m = j.at("intensity_maps");
    if (!m.is_object()) fail("dataset.intensity_maps must map modality names to knot arrays");
    out.phantom.intensity_maps.assign(out.phantom.modalities.size(), {});
    for (const auto& [name, knots] : m.items()) {
      auto it = std::find(out.phantom.modalities.begin(), out.phantom.modalities.end(), name);
      if (it == out.phantom.modalities.end())
        fail("intensity_maps references unknown modality '" + name + "'");
      out.phantom.intensity_maps[it - out.phantom.modalities.begin()] =
          knots.get<std::vector<double>>();
    }
  }
  if (j.contains("normalization")) {
    const json& nj = j.at("normalization");
    if (!nj.is_object()) fail("dataset.normalization must map modality names to modes");
    for (const auto& [name, mode] : nj.items()) {
      auto it = std::find(out.phantom.modalities.begin(), out.phantom.modalities.end(), name);
      if (it == out.phantom.modalities.end())
        fail("normalization references unknown modality '" + name + "'");
      const std::string m = mode.get<std::string>();
      if (m == "per_sample")
        out.normalization[name] = NormalizationMode::PerSample;
      else if (m == "group")
        out.normalization[name] = NormalizationMode::Group;
      else
        fail("normalization mode must be 'per_sample' or 'group', got '" + m + "'");
    }
  }
}

void parse_schedule(const json& j, ScheduleConfig& out) {
  check_keys(j, "schedule", {"kind", "timesteps", "s", "beta_start", "beta_end"});
  if (j.contains("kind")) {
    const std::string k = j.at("kind").get<std::string>();
    if (k == "cosine")
      out.kind = ScheduleConfig::Kind::Cosine;
    else if (k == "linear")
      out.kind = ScheduleConfig::Kind::Linear;
    else
      fail("schedule.kind must be 'cosine' or 'linear', got '" + k + "'");
  }
  get_if_present(j, "timesteps", out.timesteps);
  get_if_present(j, "s", out.s);
  get_if_present(j, "beta_start", out.beta_start);
  get_if_present(j, "beta_end", out.beta_end);
}

void parse_model(const json& j, ModelConfig& out) {
  check_keys(j, "model",
             {"width", "embed_dim", "iterations", "batch_size", "lr", "adam_beta1", "adam_beta2",
              "adam_eps", "log_every"});
  get_if_present(j, "width", out.width);
  get_if_present(j, "embed_dim", out.embed_dim);
  get_if_present(j, "iterations", out.train.iterations);
  get_if_present(j, "batch_size", out.train.batch_size);
  get_if_present(j, "lr", out.train.lr);
  get_if_present(j, "adam_beta1", out.train.adam_beta1);
  get_if_present(j, "adam_beta2", out.train.adam_beta2);
  get_if_present(j, "adam_eps", out.train.adam_eps);
  get_if_present(j, "log_every", out.train.log_every);
}

void parse_task(const json& j, std::map<std::string, TaskEntry>& out) {
  if (!j.is_object()) fail("task must map modality names to statuses");
  for (const auto& [name, entry] : j.items()) {
    TaskEntry te;
    if (entry.is_string()) {
      const std::string s = entry.get<std::string>();
      if (s == "clean")
        te.kind = TaskEntry::Kind::Clean;
      else if (s == "missing")
        te.kind = TaskEntry::Kind::Missing;
      else
        fail("task entry for '" + name + "' must be 'clean', 'missing' or {\"measured\": ...}");
    } else {
      check_keys(entry, "task." + name, {"measured"});
      if (!entry.contains("measured")) fail("task entry for '" + name + "' missing 'measured'");
      const json& m = entry.at("measured");
      check_keys(m, "task." + name + ".measured", {"accel", "acs", "n_coils", "r", "sigma"});
      te.kind = TaskEntry::Kind::Measured;
      get_if_present(m, "accel", te.measured.accel);
      get_if_present(m, "acs", te.measured.acs);
      get_if_present(m, "n_coils", te.measured.n_coils);
      get_if_present(m, "r", te.measured.r);
      get_if_present(m, "sigma", te.measured.sigma);
    }
    out[name] = te;
  }
}

void parse_sampler(const json& j, SamplerConfig& out) {
  check_keys(j, "sampler",
             {"kind", "num_steps", "eta", "lambda", "cg_iters", "cg_tol", "zeta", "zeta_mode",
              "clip_x0"});
  if (j.contains("kind")) {
    const std::string k = j.at("kind").get<std::string>();
    if (k == "mps")
      out.kind = SamplerConfig::Kind::Mps;
    else if (k == "mds")
      out.kind = SamplerConfig::Kind::Mds;
    else
      fail("sampler.kind must be 'mps' or 'mds', got '" + k + "'");
  }
  if (out.kind == SamplerConfig::Kind::Mps) out.mps.num_steps = 1000;
  get_if_present(j, "num_steps", out.mps.num_steps);
  get_if_present(j, "num_steps", out.mds.num_steps);
  get_if_present(j, "eta", out.mds.eta);
  get_if_present(j, "lambda", out.mds.lambda);
  get_if_present(j, "cg_iters", out.mds.cg_iters);
  get_if_present(j, "cg_tol", out.mds.cg_tol);
  get_if_present(j, "zeta", out.mps.zeta);
  if (j.contains("zeta_mode")) {
    const std::string z = j.at("zeta_mode").get<std::string>();
    if (z == "constant")
      out.mps.zeta_mode = MpsConfig::ZetaMode::Constant;
    else if (z == "normalized")
      out.mps.zeta_mode = MpsConfig::ZetaMode::Normalized;
    else
      fail("sampler.zeta_mode must be 'constant' or 'normalized', got '" + z + "'");
  }
  get_if_present(j, "clip_x0", out.mps.clip_x0);
}

void parse_eval(const json& j, EvalConfig& out) {
  check_keys(j, "eval", {"data_range", "ssim_window"});
  get_if_present(j, "data_range", out.data_range);
  get_if_present(j, "ssim_window", out.ssim_window);
}

}  // namespace

NormalizationPolicy DatasetConfig::policy() const {
  NormalizationPolicy p;
  p.modes.assign(phantom.modalities.size(), NormalizationMode::PerSample);
  for (const auto& [name, mode] : normalization) {
    for (std::size_t i = 0; i < phantom.modalities.size(); ++i)
      if (phantom.modalities[i] == name) p.modes[i] = mode;
  }
  return p;
}

NoiseSchedule ScheduleConfig::build() const {
  return kind == Kind::Cosine ? cosine_schedule(timesteps, s)
                              : linear_schedule(timesteps, beta_start, beta_end);
}

RunConfig RunConfig::parse_text(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  check_keys(j, "top level", {"schema", "seed", "dataset", "schedule", "model", "task", "sampler",
                              "eval"});
  if (j.contains("schema") && j.at("schema").get<std::string>() != "a2a/1")
    fail("unsupported schema, expected 'a2a/1'");
  RunConfig cfg;
  get_if_present(j, "seed", cfg.seed);
  cfg.model.train.seed = cfg.seed;
  cfg.dataset.phantom.seed = cfg.seed;
  if (j.contains("dataset")) parse_dataset(j.at("dataset"), cfg.dataset);
  cfg.dataset.phantom.seed = cfg.seed;
  if (j.contains("schedule")) parse_schedule(j.at("schedule"), cfg.schedule);
  if (j.contains("model")) parse_model(j.at("model"), cfg.model);
  if (j.contains("task")) parse_task(j.at("task"), cfg.task);
  if (j.contains("sampler")) parse_sampler(j.at("sampler"), cfg.sampler);
  if (j.contains("eval")) parse_eval(j.at("eval"), cfg.eval);
  // task names must exist in the configured modality set
  for (const auto& [name, _] : cfg.task) {
    const auto& mods = cfg.dataset.phantom.modalities;
    if (std::find(mods.begin(), mods.end(), name) == mods.end())
      fail("task references modality '" + name + "' not present in dataset.modalities");
  }
  return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_text(text);
}

}  // namespace a2a
