#pragma once

// Top-level JSON run configuration: dataset, split, pipeline and sweep grids.

#include "aerosurrogate/json_util.hpp"
#include "aerosurrogate/pipeline_config.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace aerosurrogate {

struct DatasetConfig {
  GridSpec grid;
  std::size_t n_conditions = 435;
  Envelope envelope;
  double noise_std = 0.0;
  double jitter = 0.8;

  void validate() const {
    grid.validate();
    require(n_conditions >= 2, "dataset.n_conditions must be at least 2");
    envelope.validate();
    require(std::isfinite(noise_std) && noise_std >= 0.0, "dataset.noise_std must be nonnegative");
    require(jitter >= 0.0 && jitter <= 1.0, "dataset.jitter must lie in [0, 1]");
  }
};

struct SweepConfig {
  std::vector<double> betas{0.0, 1e-4, 1e-3, 8e-3, 6e-2, 1.0};
  std::vector<Index> latent_dims{2, 3, 4, 5, 6};
  std::vector<bool> use_pca{true, false};
  bool keep_bundles = false;

  std::size_t cells() const { return use_pca.size() * betas.size() * latent_dims.size(); }

  void validate() const {
    require(!betas.empty() && !latent_dims.empty() && !use_pca.empty(), "sweep grids must be nonempty");
    for (double b : betas) require(std::isfinite(b) && b >= 0.0, "sweep.betas must be nonnegative");
    for (Index d : latent_dims) require(d >= 1, "sweep.latent_dims must be positive");
  }
};

struct SweepCell {
  std::size_t index = 0;
  bool use_pca = true;
  double beta = 0.0;
  Index latent_dim = 2;
};

// Stream ids for seeds derived from RunConfig::seed.
enum class RunStream : std::uint64_t { kDesign = 101, kNoise, kSplit, kSweepCell = 1000 };

struct RunConfig {
  DatasetConfig dataset;
  double train_fraction = 0.7;
  PipelineConfig pipeline;
  SweepConfig sweep;
  std::uint64_t seed = 1;

  std::uint64_t stream_seed(RunStream s) const {
    return derive_seed(seed, static_cast<std::uint64_t>(s));
  }

  /// Cells ordered pca-major, then beta, then d.
  std::vector<SweepCell> sweep_cells() const {
    std::vector<SweepCell> out;
    for (bool pca : sweep.use_pca) {
      for (double beta : sweep.betas) {
        for (Index d : sweep.latent_dims) out.push_back({out.size(), pca, beta, d});
      }
    }
    return out;
  }

  /// Pipeline settings for one sweep cell; its seed depends only on the cell index.
  PipelineConfig cell_pipeline(const SweepCell& cell) const {
    PipelineConfig p = pipeline;
    p.use_pca = cell.use_pca;
    p.beta = cell.beta;
    p.latent_dim = cell.latent_dim;
    p.seed = derive_seed(seed, static_cast<std::uint64_t>(RunStream::kSweepCell) + cell.index);
    return p;
  }

  /// Copies the base seed and envelope into the pipeline section.
  void synchronize() {
    pipeline.seed = seed;
    pipeline.envelope = dataset.envelope;
  }

  void validate() const {
    dataset.validate();
    require(train_fraction > 0.0 && train_fraction < 1.0, "split.train_fraction must lie in (0, 1)");
    pipeline.validate();
    sweep.validate();
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json pipeline = to_json(c.pipeline);
  pipeline.erase("seed");
  pipeline.erase("envelope");
  return {{"seed", c.seed},
          {"dataset",
           {{"n_chord", c.dataset.grid.n_chord},
            {"n_span", c.dataset.grid.n_span},
            {"n_conditions", c.dataset.n_conditions},
            {"mach", {c.dataset.envelope.mach_min, c.dataset.envelope.mach_max}},
            {"alpha", {c.dataset.envelope.alpha_min, c.dataset.envelope.alpha_max}},
            {"noise_std", c.dataset.noise_std},
            {"jitter", c.dataset.jitter}}},
          {"split", {{"train_fraction", c.train_fraction}}},
          {"pipeline", pipeline},
          {"sweep",
           {{"betas", c.sweep.betas},
            {"latent_dims", c.sweep.latent_dims},
            {"use_pca", c.sweep.use_pca},
            {"keep_bundles", c.sweep.keep_bundles}}}};
}

/// Parses and validates a run configuration. Absent keys keep their defaults.
inline RunConfig parse_run_config(std::string_view text, const std::string& origin) {
  const nlohmann::json j = json_util::parse(text, origin);
  RunConfig c;
  const std::string& root = origin;
  json_util::reject_unknown_keys(j, root, {"seed", "dataset", "split", "pipeline", "sweep"});
  json_util::read(j, root, "seed", c.seed);
  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    const std::string path = root + ".dataset";
    json_util::reject_unknown_keys(
        d, path, {"n_chord", "n_span", "n_conditions", "mach", "alpha", "noise_std", "jitter"});
    json_util::read(d, path, "n_chord", c.dataset.grid.n_chord);
    json_util::read(d, path, "n_span", c.dataset.grid.n_span);
    json_util::read(d, path, "n_conditions", c.dataset.n_conditions);
    read_range(d, path, "mach", c.dataset.envelope.mach_min, c.dataset.envelope.mach_max);
    read_range(d, path, "alpha", c.dataset.envelope.alpha_min, c.dataset.envelope.alpha_max);
    json_util::read(d, path, "noise_std", c.dataset.noise_std);
    json_util::read(d, path, "jitter", c.dataset.jitter);
  }
  if (j.contains("split")) {
    const auto& s = j["split"];
    json_util::reject_unknown_keys(s, root + ".split", {"train_fraction"});
    json_util::read(s, root + ".split", "train_fraction", c.train_fraction);
  }
  if (j.contains("pipeline")) {
    const auto& p = j["pipeline"];
    if (p.is_object() && (p.contains("seed") || p.contains("envelope"))) {
      throw InvalidArgument(root + ".pipeline: seed and envelope are set at the top level and in dataset");
    }
    from_json(p, root + ".pipeline", c.pipeline);
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    const std::string path = root + ".sweep";
    json_util::reject_unknown_keys(s, path, {"betas", "latent_dims", "use_pca", "keep_bundles"});
    json_util::read(s, path, "betas", c.sweep.betas);
    json_util::read(s, path, "latent_dims", c.sweep.latent_dims);
    json_util::read(s, path, "use_pca", c.sweep.use_pca);
    json_util::read(s, path, "keep_bundles", c.sweep.keep_bundles);
  }
  c.synchronize();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(origin + ": " + e.what());
  }
  return c;
}

}  // namespace aerosurrogate
