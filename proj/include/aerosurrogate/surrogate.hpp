#pragma once

// End-to-end surrogate: standardize -> [PCA] -> beta-VAE -> GPR on the latent
// means, plus decoder fine-tuning, a direct MLP benchmark and latent-space
// summaries.

#include "aerosurrogate/dataset.hpp"
#include "aerosurrogate/gpr.hpp"
#include "aerosurrogate/metrics.hpp"
#include "aerosurrogate/mlp.hpp"
#include "aerosurrogate/pca.hpp"
#include "aerosurrogate/pipeline_config.hpp"
#include "aerosurrogate/vae.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace aerosurrogate {

// Stream ids for seeds derived from PipelineConfig::seed.
enum class SeedStream : std::uint64_t { kInit = 1, kTrain, kGpr, kFineTune, kBenchmark };

inline std::uint64_t stage_seed(const PipelineConfig& c, SeedStream s) {
  return derive_seed(c.seed, static_cast<std::uint64_t>(s));
}

struct SurrogateBundle {
  PipelineConfig config;
  GridSpec grid;
  Index field_dim = 0;
  Standardizer standardizer;  // per grid point, on Cp
  std::optional<PcaBasis> pca;
  Standardizer coordinate_scaler;  // pooled, on principal coordinates (PCA mode only)
  VaeModel vae;
  GprModel gpr;
  std::optional<Mlp> fine_tuned_decoder;
  SplitIndices split;
  TrainHistory history;
  std::vector<double> fine_tune_history;

  Index representation_dim() const { return pca ? pca->rank() : field_dim; }

  /// Checks the chain condition(2) -> d -> network input -> q.
  void check_dimensions() const {
    require(gpr.input_dim() == 2, "bundle: GPR must take (Mach, alpha)");
    require(gpr.outputs() == vae.latent_dim, "bundle: GPR outputs must equal latent dimension");
    vae.validate();
    require(vae.input_dim() == representation_dim(), "bundle: network input must match representation");
    require(standardizer.features() == field_dim, "bundle: standardizer size mismatch");
    if (pca) {
      require(pca->features() == field_dim, "bundle: PCA feature count must equal q");
      require(coordinate_scaler.features() == pca->rank(), "bundle: coordinate scaler size mismatch");
    }
    if (fine_tuned_decoder) {
      require(fine_tuned_decoder->architecture() == vae.decoder.architecture(),
              "bundle: fine-tuned decoder architecture differs from the original");
    }
  }
};

inline Matrix conditions_matrix(std::span<const FlightCondition> conditions) {
  Matrix p(static_cast<Index>(conditions.size()), 2);
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    p(static_cast<Index>(i), 0) = conditions[i].mach;
    p(static_cast<Index>(i), 1) = conditions[i].alpha;
  }
  return p;
}

namespace detail {

/// Principal coordinates with numerically null components zeroed. Those
/// directions carry no training variance, so off-span content of unseen
/// fields is dropped instead of reaching the network.
inline Matrix principal_coordinates(const PcaBasis& basis, const Matrix& fields) {
  Matrix coords = pca_transform(basis, fields);
  const auto null = basis.null_components();
  for (std::size_t k = 0; k < null.size(); ++k) {
    if (null[k]) coords.row(static_cast<Index>(k)).setZero();
  }
  return coords;
}

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const DivergenceError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(std::string(stage) + ": " + e.what());
  } catch (const IndefiniteKernel& e) {
    throw FitError(std::string(stage) + ": " + e.what());
  } catch (const FitError& e) {
    throw FitError(std::string(stage) + ": " + e.what());
  }
}

inline Vector envelope_lower(const Envelope& e) { return Vector{{e.mach_min, e.alpha_min}}; }
inline Vector envelope_upper(const Envelope& e) { return Vector{{e.mach_max, e.alpha_max}}; }

}  // namespace detail

/// Network representation of q x k fields: standardized Cp, or pooled-scaled
/// principal coordinates of standardized Cp in PCA mode.
inline Matrix to_representation(const SurrogateBundle& b, const Matrix& fields) {
  require(fields.rows() == b.field_dim, "to_representation: field dimension mismatch");
  Matrix z = b.standardizer.apply(fields);
  if (!b.pca) return z;
  return b.coordinate_scaler.apply(detail::principal_coordinates(*b.pca, z));
}

inline Matrix to_fields(const SurrogateBundle& b, const Matrix& representation) {
  if (!b.pca) return b.standardizer.invert(representation);
  return b.standardizer.invert(pca_inverse(*b.pca, b.coordinate_scaler.invert(representation)));
}

inline SurrogateBundle train_surrogate(const FieldMatrix& data, const SplitIndices& split,
                                       const PipelineConfig& config) {
  data.validate();
  config.validate();
  require(split.train.size() >= 2, "train_surrogate: need at least 2 training samples");
  for (auto idx : {std::span<const Index>(split.train), std::span<const Index>(split.test)}) {
    for (Index i : idx) require(i >= 0 && i < data.cols(), "train_surrogate: split index out of range");
  }

  SurrogateBundle b;
  b.config = config;
  b.grid = data.grid;
  b.field_dim = data.rows();
  b.split = split;

  const Matrix train_fields = select_columns(data.values, split.train);
  b.standardizer = detail::run_stage("standardize", [&] { return fit_standardizer(train_fields); });
  Matrix train_rep = b.standardizer.apply(train_fields);
  if (config.use_pca) {
    detail::run_stage("pca", [&] {
      b.pca = pca_fit(train_rep);
      const Matrix coords = detail::principal_coordinates(*b.pca, train_rep);
      b.coordinate_scaler = fit_pooled_standardizer(coords);
      train_rep = b.coordinate_scaler.apply(coords);
      return 0;
    });
  }

  detail::run_stage("vae", [&] {
    const auto [enc, dec] =
        mirrored_architectures(train_rep.rows(), config.encoder_hidden(), config.latent_dim);
    VaeModel model = init_vae(enc, dec, config.latent_dim, config.beta,
                              stage_seed(config, SeedStream::kInit));
    TrainConfig tc = config.train;
    tc.seed = stage_seed(config, SeedStream::kTrain);
    auto result = train_vae(std::move(model), train_rep, tc);
    b.vae = std::move(result.model);
    b.history = std::move(result.history);
    return 0;
  });

  detail::run_stage("gpr", [&] {
    const Matrix mu = encode(b.vae, train_rep).mu;  // frozen encoder means
    GprOptions opts = config.gpr;
    opts.seed = stage_seed(config, SeedStream::kGpr);
    b.gpr = gpr_fit(conditions_matrix(select_conditions(data.conditions, split.train)),
                    mu.transpose(), detail::envelope_lower(config.envelope),
                    detail::envelope_upper(config.envelope), opts);
    return 0;
  });
  b.check_dimensions();
  return b;
}

/// GPR latent means, d x m.
inline Matrix predict_latents(const SurrogateBundle& b, std::span<const FlightCondition> conditions) {
  return gpr_predict(b.gpr, conditions_matrix(conditions)).means.transpose();
}

enum class DecoderChoice { kPreferFineTuned, kOriginal };

inline Matrix decode_fields(const SurrogateBundle& b, const Matrix& latents,
                            DecoderChoice choice = DecoderChoice::kPreferFineTuned) {
  require(latents.rows() == b.vae.latent_dim, "decode_fields: latent dimension mismatch");
  const Mlp& dec = (choice == DecoderChoice::kPreferFineTuned && b.fine_tuned_decoder)
                       ? *b.fine_tuned_decoder
                       : b.vae.decoder;
  return to_fields(b, dec.forward(latents));
}

struct CpPrediction {
  Matrix fields;   // q x m
  Matrix latents;  // d x m
  std::vector<bool> out_of_envelope;

  bool any_out_of_envelope() const {
    return std::find(out_of_envelope.begin(), out_of_envelope.end(), true) != out_of_envelope.end();
  }
};

inline CpPrediction predict_cp(const SurrogateBundle& b, std::span<const FlightCondition> conditions,
                               DecoderChoice choice = DecoderChoice::kPreferFineTuned) {
  b.check_dimensions();
  require(!conditions.empty(), "predict_cp: no conditions");
  CpPrediction out;
  out.latents = predict_latents(b, conditions);
  out.fields = decode_fields(b, out.latents, choice);
  for (const auto& c : conditions) out.out_of_envelope.push_back(!b.config.envelope.contains(c));
  return out;
}

/// Autoencoder reconstruction x~ = D(mu(E(x))) mapped back to fields, original decoder.
inline Matrix reconstruct_fields(const SurrogateBundle& b, const Matrix& fields) {
  const Matrix mu = encode(b.vae, to_representation(b, fields)).mu;
  return decode_fields(b, mu, DecoderChoice::kOriginal);
}

inline SurrogateBundle fine_tune_decoder(const SurrogateBundle& bundle, const FieldMatrix& data,
                                         const SplitIndices& split, const TrainConfig& tune) {
  bundle.check_dimensions();
  require(data.rows() == bundle.field_dim, "fine_tune_decoder: field dimension mismatch");
  SurrogateBundle out = bundle;
  const Matrix targets = to_representation(bundle, select_columns(data.values, split.train));
  const Matrix latents = predict_latents(bundle, select_conditions(data.conditions, split.train));
  Mlp decoder = bundle.vae.decoder;
  TrainConfig tc = tune;
  tc.seed = stage_seed(bundle.config, SeedStream::kFineTune);
  out.fine_tune_history = train_regressor(decoder, latents, targets, tc, "fine_tune_decoder");
  out.fine_tuned_decoder = std::move(decoder);
  out.config.fine_tune = tune;
  return out;
}

/// Direct (Mach, alpha) -> representation regressor sharing the bundle's
/// preprocessing.
struct MlpBenchmark {
  Mlp net;
  Envelope envelope;
  std::vector<double> history;
};

inline Matrix normalized_conditions(const Envelope& e, std::span<const FlightCondition> conditions) {
  Matrix x(2, static_cast<Index>(conditions.size()));
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    x(0, static_cast<Index>(i)) = (conditions[i].mach - e.mach_min) / (e.mach_max - e.mach_min);
    x(1, static_cast<Index>(i)) = (conditions[i].alpha - e.alpha_min) / (e.alpha_max - e.alpha_min);
  }
  return x;
}

/// Architecture mirroring the bundle's decoder with a 2-wide input.
inline MlpArchitecture benchmark_architecture(const SurrogateBundle& b) {
  MlpArchitecture arch = b.vae.decoder.architecture();
  arch.input_dim = 2;
  return arch;
}

inline MlpBenchmark train_mlp_benchmark(const SurrogateBundle& b, const FieldMatrix& data,
                                        const SplitIndices& split, const MlpArchitecture& arch,
                                        const TrainConfig& config) {
  require(arch.input_dim == 2, "train_mlp_benchmark: input must be the flight condition");
  require(arch.output_dim == b.representation_dim(),
          "train_mlp_benchmark: output must match the representation dimension");
  const Matrix targets = to_representation(b, select_columns(data.values, split.train));
  const Matrix inputs =
      normalized_conditions(b.config.envelope, select_conditions(data.conditions, split.train));
  Rng rng(stage_seed(b.config, SeedStream::kBenchmark));
  MlpBenchmark bench{Mlp(arch, rng), b.config.envelope, {}};
  TrainConfig tc = config;
  tc.seed = derive_seed(stage_seed(b.config, SeedStream::kBenchmark), 1);
  bench.history = train_regressor(bench.net, inputs, targets, tc, "mlp_benchmark");
  return bench;
}

inline Matrix predict_benchmark(const SurrogateBundle& b, const MlpBenchmark& bench,
                                std::span<const FlightCondition> conditions) {
  return to_fields(b, bench.net.forward(normalized_conditions(bench.envelope, conditions)));
}

// ---------------------------------------------------------------------------
// Evaluation

struct SplitEvaluation {
  MetricsReport autoencoder;
  MetricsReport surrogate;             // original decoder
  std::optional<MetricsReport> tuned;  // fine-tuned decoder, when present
  std::vector<double> nrmse;           // latent NRMSE per sample
};

struct BundleEvaluation {
  SplitEvaluation train;
  SplitEvaluation test;
};

inline SplitEvaluation evaluate_split(const SurrogateBundle& b, const FieldMatrix& data,
                                      std::span<const Index> cols, const Vector& mu_bar) {
  SplitEvaluation e;
  const Matrix truth = select_columns(data.values, cols);
  const auto conds = select_conditions(data.conditions, cols);
  e.autoencoder = evaluate_metrics(reconstruct_fields(b, truth), truth);
  const Matrix mu = encode(b.vae, to_representation(b, truth)).mu;
  const Matrix mu_hat = predict_latents(b, conds);
  e.surrogate = evaluate_metrics(decode_fields(b, mu_hat, DecoderChoice::kOriginal), truth);
  if (b.fine_tuned_decoder) {
    e.tuned = evaluate_metrics(decode_fields(b, mu_hat, DecoderChoice::kPreferFineTuned), truth);
  }
  e.nrmse = nrmse_columns(mu, mu_hat, mu_bar);
  return e;
}

inline Vector training_latent_mean(const SurrogateBundle& b, const FieldMatrix& data) {
  const Matrix mu = encode(b.vae, to_representation(b, select_columns(data.values, b.split.train))).mu;
  return mu.rowwise().mean();
}

inline BundleEvaluation evaluate_bundle(const SurrogateBundle& b, const FieldMatrix& data) {
  b.check_dimensions();
  require(data.rows() == b.field_dim, "evaluate_bundle: field dimension mismatch");
  const Vector mu_bar = training_latent_mean(b, data);
  BundleEvaluation out;
  out.train = evaluate_split(b, data, b.split.train, mu_bar);
  if (!b.split.test.empty()) out.test = evaluate_split(b, data, b.split.test, mu_bar);
  return out;
}

// ---------------------------------------------------------------------------
// Latent-space summary

/// Vertices of the convex hull of 2-D points (monotone chain), counter-clockwise
/// starting from the lowest-x point. Collinear boundary points are excluded.
inline std::vector<std::size_t> convex_hull_2d(const std::vector<std::array<double, 2>>& pts) {
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pts[a] < pts[b] || (pts[a] == pts[b] && a < b);
  });
  order.erase(std::unique(order.begin(), order.end(),
                          [&](std::size_t a, std::size_t b) { return pts[a] == pts[b]; }),
              order.end());
  if (order.size() < 3) return order;

  auto cross = [&](std::size_t o, std::size_t a, std::size_t b) {
    return (pts[a][0] - pts[o][0]) * (pts[b][1] - pts[o][1]) -
           (pts[a][1] - pts[o][1]) * (pts[b][0] - pts[o][0]);
  };
  std::vector<std::size_t> hull(2 * order.size());
  std::size_t k = 0;
  for (std::size_t i : order) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], i) <= 0.0) --k;
    hull[k++] = i;
  }
  for (std::size_t j = order.size() - 1, lower = k + 1; j-- > 0;) {
    const std::size_t i = order[j];
    while (k >= lower && cross(hull[k - 2], hull[k - 1], i) <= 0.0) --k;
    hull[k++] = i;
  }
  hull.resize(k - 1);
  return hull;
}

struct LatentRow {
  FlightCondition condition;
  Vector mu;
  bool is_train = true;
  bool is_hull_vertex = false;
};

struct LatentSummary {
  std::vector<LatentRow> rows;  // one per sample, in data column order
  std::vector<Index> ranking;
  std::vector<double> zeroing_errors;
  std::vector<std::size_t> hull;  // row indices, empty unless d == 2
};

inline LatentSummary export_latent_summary(const SurrogateBundle& b, const FieldMatrix& data) {
  b.check_dimensions();
  LatentSummary s;
  const Matrix rep = to_representation(b, data.values);
  const Matrix mu = encode(b.vae, rep).mu;
  std::vector<bool> train_flag(static_cast<std::size_t>(data.cols()), false);
  for (Index i : b.split.train) train_flag[static_cast<std::size_t>(i)] = true;
  for (Index c = 0; c < data.cols(); ++c) {
    s.rows.push_back({data.conditions[static_cast<std::size_t>(c)], mu.col(c),
                      train_flag[static_cast<std::size_t>(c)], false});
  }
  const Matrix train_rep = select_columns(rep, b.split.train);
  s.zeroing_errors = latent_zeroing_errors(b.vae, train_rep);
  s.ranking = rank_latents(b.vae, train_rep);
  if (b.vae.latent_dim == 2) {
    std::vector<std::array<double, 2>> pts;
    for (Index c = 0; c < mu.cols(); ++c) pts.push_back({mu(0, c), mu(1, c)});
    s.hull = convex_hull_2d(pts);
    for (std::size_t v : s.hull) s.rows[v].is_hull_vertex = true;
  }
  return s;
}

}  // namespace aerosurrogate
