#pragma once

#include "aerosurrogate/dataset.hpp"
#include "aerosurrogate/gpr.hpp"
#include "aerosurrogate/json_util.hpp"
#include "aerosurrogate/mlp.hpp"

#include <cstdint>
#include <vector>

namespace aerosurrogate {

/// Desk-scale counterpart of the published training setup.
inline TrainConfig default_vae_training() {
  TrainConfig c;
  c.epochs = 300;
  c.batch_size = 32;
  return c;
}

inline TrainConfig default_fine_tuning() {
  TrainConfig c = default_vae_training();
  c.learning_rate = 1e-4;
  c.epochs = 500;
  return c;
}

struct PipelineConfig {
  bool use_pca = true;
  Index latent_dim = 2;
  double beta = 8e-3;
  // Encoder hidden layouts; decoders mirror them.
  std::vector<Index> pca_hidden{256, 128, 64, 32, 16};
  std::vector<Index> raw_hidden{256, 128, 64, 32, 16};
  TrainConfig train = default_vae_training();
  TrainConfig fine_tune = default_fine_tuning();
  GprOptions gpr;
  Envelope envelope;
  std::uint64_t seed = 1;

  const std::vector<Index>& encoder_hidden() const { return use_pca ? pca_hidden : raw_hidden; }

  void validate() const {
    require(latent_dim >= 1, "latent_dim must be positive");
    require(std::isfinite(beta) && beta >= 0.0, "beta must be finite and nonnegative");
    for (Index h : encoder_hidden()) require(h >= 1, "hidden sizes must be positive");
    train.validate();
    fine_tune.validate();
    gpr.validate();
    envelope.validate();
  }
};

namespace detail {

inline nlohmann::json train_to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},       {"adam_eps", c.adam_eps},
          {"epochs", c.epochs},               {"batch_size", c.batch_size}};
}

inline void train_from_json(const nlohmann::json& j, const std::string& path, TrainConfig& c) {
  json_util::reject_unknown_keys(
      j, path, {"learning_rate", "adam_beta1", "adam_beta2", "adam_eps", "epochs", "batch_size"});
  json_util::read(j, path, "learning_rate", c.learning_rate);
  json_util::read(j, path, "adam_beta1", c.adam_beta1);
  json_util::read(j, path, "adam_beta2", c.adam_beta2);
  json_util::read(j, path, "adam_eps", c.adam_eps);
  json_util::read(j, path, "epochs", c.epochs);
  json_util::read(j, path, "batch_size", c.batch_size);
}

}  // namespace detail

inline nlohmann::json to_json(const PipelineConfig& c) {
  return {{"use_pca", c.use_pca},
          {"latent_dim", c.latent_dim},
          {"beta", c.beta},
          {"pca_hidden", c.pca_hidden},
          {"raw_hidden", c.raw_hidden},
          {"train", detail::train_to_json(c.train)},
          {"fine_tune", detail::train_to_json(c.fine_tune)},
          {"gpr", {{"restarts", c.gpr.restarts}, {"iterations", c.gpr.iterations}}},
          {"envelope",
           {{"mach", {c.envelope.mach_min, c.envelope.mach_max}},
            {"alpha", {c.envelope.alpha_min, c.envelope.alpha_max}}}},
          {"seed", c.seed}};
}

inline void read_range(const nlohmann::json& j, const std::string& path, const char* key,
                       double& lo, double& hi) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
    throw InvalidArgument(path + "." + key + ": expected [low, high]");
  }
  lo = (*it)[0].get<double>();
  hi = (*it)[1].get<double>();
}

/// Overlays the keys present in `j` onto `c`.
inline void from_json(const nlohmann::json& j, const std::string& path, PipelineConfig& c) {
  json_util::reject_unknown_keys(j, path,
                                 {"use_pca", "latent_dim", "beta", "pca_hidden", "raw_hidden",
                                  "train", "fine_tune", "gpr", "envelope", "seed"});
  json_util::read(j, path, "use_pca", c.use_pca);
  json_util::read(j, path, "latent_dim", c.latent_dim);
  json_util::read(j, path, "beta", c.beta);
  json_util::read(j, path, "pca_hidden", c.pca_hidden);
  json_util::read(j, path, "raw_hidden", c.raw_hidden);
  json_util::read(j, path, "seed", c.seed);
  if (j.contains("train")) detail::train_from_json(j["train"], path + ".train", c.train);
  if (j.contains("fine_tune")) detail::train_from_json(j["fine_tune"], path + ".fine_tune", c.fine_tune);
  if (j.contains("gpr")) {
    const auto& g = j["gpr"];
    json_util::reject_unknown_keys(g, path + ".gpr", {"restarts", "iterations"});
    json_util::read(g, path + ".gpr", "restarts", c.gpr.restarts);
    json_util::read(g, path + ".gpr", "iterations", c.gpr.iterations);
  }
  if (j.contains("envelope")) {
    const auto& e = j["envelope"];
    json_util::reject_unknown_keys(e, path + ".envelope", {"mach", "alpha"});
    read_range(e, path + ".envelope", "mach", c.envelope.mach_min, c.envelope.mach_max);
    read_range(e, path + ".envelope", "alpha", c.envelope.alpha_min, c.envelope.alpha_max);
  }
}

}  // namespace aerosurrogate
