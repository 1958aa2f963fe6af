#pragma once

// Synthetic transonic pressure fields, data matrix bookkeeping, splits and
// per-feature standardization.

#include "aerosurrogate/common.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace aerosurrogate {

struct FlightCondition {
  double mach = 0.0;
  double alpha = 0.0;  // degrees

  bool operator==(const FlightCondition&) const = default;
};

/// Rectangle of flight conditions covered by a dataset.
struct Envelope {
  double mach_min = 0.5;
  double mach_max = 0.96;
  double alpha_min = 0.0;
  double alpha_max = 11.5;

  bool contains(const FlightCondition& c) const {
    return c.mach >= mach_min && c.mach <= mach_max && c.alpha >= alpha_min &&
           c.alpha <= alpha_max;
  }

  void validate() const {
    require(std::isfinite(mach_min) && std::isfinite(mach_max) &&
                std::isfinite(alpha_min) && std::isfinite(alpha_max),
            "envelope bounds must be finite");
    require(mach_max > mach_min, "degenerate Mach range");
    require(alpha_max > alpha_min, "degenerate angle-of-attack range");
  }
};

/// Structured chordwise x spanwise grid on the unit square.
struct GridSpec {
  std::uint64_t n_chord = 48;
  std::uint64_t n_span = 24;

  std::uint64_t points() const { return n_chord * n_span; }
  double xi(std::uint64_t i) const {
    return static_cast<double>(i) / static_cast<double>(n_chord - 1);
  }
  double eta(std::uint64_t j) const {
    return static_cast<double>(j) / static_cast<double>(n_span - 1);
  }
  // Rows are ordered chordwise-fastest.
  std::uint64_t row(std::uint64_t i, std::uint64_t j) const {
    return j * n_chord + i;
  }

  void validate() const {
    require(n_chord > 1 && n_span > 1, "grid needs at least 2 stations per direction");
  }

  bool operator==(const GridSpec&) const = default;
};

/// q x n matrix of pressure samples; column i belongs to conditions[i].
struct FieldMatrix {
  Matrix values;
  std::vector<FlightCondition> conditions;
  GridSpec grid;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  void validate() const {
    grid.validate();
    require(static_cast<std::uint64_t>(values.rows()) == grid.points(),
            "field matrix row count does not match grid");
    require(static_cast<std::size_t>(values.cols()) == conditions.size(),
            "field matrix column count does not match condition count");
    require(values.allFinite(), "field matrix contains non-finite values");
  }
};

struct SplitIndices {
  std::vector<Index> train;
  std::vector<Index> test;
};

/// Closed-form Cp at one grid station. Exposed for tests.
inline double synthetic_cp(const FlightCondition& c, double xi, double eta) {
  const double m = (c.mach - 0.5) / 0.46;
  const double a = c.alpha / 11.5;
  const double amplitude = (0.6 + 1.8 * a) * (1.0 - 0.35 * eta * eta);
  const double plateau = 0.3 + 0.5 * a;
  const double critical = 0.62 - 0.25 * a;
  const double strength = 1.2 * std::max(0.0, m - critical);
  const double shock = std::clamp(0.25 + 0.5 * m - 0.2 * a - 0.15 * eta, 0.05, 0.9);
  const double step = 0.5 * (1.0 + std::tanh((xi - shock) / 0.015));
  return -amplitude * std::exp(-xi / 0.08) - plateau * (1.0 - xi) * (1.0 - strength * step) +
         0.1 * xi;
}

/// Shock location used by synthetic_cp, before any noise.
inline double synthetic_shock_position(const FlightCondition& c, double eta) {
  const double m = (c.mach - 0.5) / 0.46;
  const double a = c.alpha / 11.5;
  return std::clamp(0.25 + 0.5 * m - 0.2 * a - 0.15 * eta, 0.05, 0.9);
}

inline FieldMatrix generate_synthetic(const GridSpec& grid,
                                      std::span<const FlightCondition> conditions,
                                      double noise_std, std::uint64_t seed) {
  grid.validate();
  require(!conditions.empty(), "generate_synthetic: empty condition list");
  require(std::isfinite(noise_std) && noise_std >= 0.0,
          "generate_synthetic: noise_std must be finite and nonnegative");
  for (const auto& c : conditions) {
    require(std::isfinite(c.mach) && std::isfinite(c.alpha),
            "generate_synthetic: non-finite flight condition");
  }

  FieldMatrix out;
  out.grid = grid;
  out.conditions.assign(conditions.begin(), conditions.end());
  out.values.resize(static_cast<Index>(grid.points()), static_cast<Index>(conditions.size()));
  for (std::size_t col = 0; col < conditions.size(); ++col) {
    // one stream per column so any evaluation order gives the same bits
    Rng rng(derive_seed(seed, col));
    for (std::uint64_t j = 0; j < grid.n_span; ++j) {
      for (std::uint64_t i = 0; i < grid.n_chord; ++i) {
        double cp = synthetic_cp(conditions[col], grid.xi(i), grid.eta(j));
        if (noise_std > 0.0) cp += noise_std * rng.normal();
        out.values(static_cast<Index>(grid.row(i, j)), static_cast<Index>(col)) = cp;
      }
    }
  }
  return out;
}

/// Stratified-jittered design over the envelope. Points are spread over
/// round(sqrt(n)) angle-of-attack strata; each stratum splits the Mach range
/// into equal cells and places one point per cell. `jitter` in [0, 1] is the
/// fraction of a cell the point may move away from its center.
inline std::vector<FlightCondition> sample_envelope(std::size_t n, const Envelope& env,
                                                    std::uint64_t seed, double jitter = 0.8) {
  require(n >= 1, "sample_envelope: n must be at least 1");
  env.validate();
  require(jitter >= 0.0 && jitter <= 1.0, "sample_envelope: jitter must lie in [0, 1]");

  const auto strata = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n)))));
  Rng rng(seed);
  std::vector<FlightCondition> out;
  out.reserve(n);
  const double alpha_cell = (env.alpha_max - env.alpha_min) / static_cast<double>(strata);
  for (std::size_t s = 0; s < strata; ++s) {
    const std::size_t count = n / strata + (s < n % strata ? 1 : 0);
    const double mach_cell = (env.mach_max - env.mach_min) / static_cast<double>(count);
    for (std::size_t k = 0; k < count; ++k) {
      const double u = 0.5 + jitter * (rng.uniform() - 0.5);
      const double v = 0.5 + jitter * (rng.uniform() - 0.5);
      out.push_back({env.mach_min + (static_cast<double>(k) + u) * mach_cell,
                     env.alpha_min + (static_cast<double>(s) + v) * alpha_cell});
    }
  }
  return out;
}

inline SplitIndices split_dataset(std::size_t n, double train_fraction, std::uint64_t seed) {
  require(n >= 2, "split_dataset: need at least 2 samples");
  require(train_fraction > 0.0 && train_fraction < 1.0,
          "split_dataset: train fraction must lie in (0, 1)");
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  require(n_train >= 1 && n_train < n, "split_dataset: fraction leaves an empty partition");

  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  rng.shuffle(perm.begin(), perm.end());

  SplitIndices split;
  split.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

inline Matrix select_columns(const Matrix& m, std::span<const Index> cols) {
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    require(cols[k] >= 0 && cols[k] < m.cols(), "column index out of range");
    out.col(static_cast<Index>(k)) = m.col(cols[k]);
  }
  return out;
}

inline std::vector<FlightCondition> select_conditions(std::span<const FlightCondition> all,
                                                      std::span<const Index> idx) {
  std::vector<FlightCondition> out;
  out.reserve(idx.size());
  for (Index i : idx) {
    require(i >= 0 && static_cast<std::size_t>(i) < all.size(), "condition index out of range");
    out.push_back(all[static_cast<std::size_t>(i)]);
  }
  return out;
}

/// Per-feature affine map to zero mean and unit (population) variance.
struct Standardizer {
  static constexpr double kScaleFloor = 1e-8;

  Vector mean;
  Vector scale;

  Index features() const { return mean.size(); }

  Matrix apply(const Matrix& x) const {
    require(x.rows() == mean.size(), "standardizer: feature count mismatch");
    return (x.colwise() - mean).array().colwise() / scale.array();
  }

  Matrix invert(const Matrix& z) const {
    require(z.rows() == mean.size(), "standardizer: feature count mismatch");
    return (z.array().colwise() * scale.array()).matrix().colwise() + mean;
  }
};

/// Fits on all columns of `data`.
inline Standardizer fit_standardizer(const Matrix& data) {
  require(data.cols() >= 2, "fit_standardizer: need at least 2 training columns");
  require(data.allFinite(), "fit_standardizer: non-finite input");
  Standardizer s;
  const double n = static_cast<double>(data.cols());
  s.mean = data.rowwise().sum() / n;
  s.scale = ((data.colwise() - s.mean).array().square().rowwise().sum() / n).sqrt().matrix();
  s.scale = s.scale.cwiseMax(Standardizer::kScaleFloor);
  return s;
}

/// Per-feature means with one shared scale: the root of the average
/// per-feature variance. Relative magnitudes between features are preserved.
inline Standardizer fit_pooled_standardizer(const Matrix& data) {
  Standardizer s = fit_standardizer(data);
  const double pooled = std::sqrt(
      ((data.colwise() - s.mean).array().square().sum()) / static_cast<double>(data.size()));
  s.scale.setConstant(std::max(pooled, Standardizer::kScaleFloor));
  return s;
}

inline Standardizer fit_standardizer(const FieldMatrix& m, std::span<const Index> train_cols) {
  return fit_standardizer(select_columns(m.values, train_cols));
}

}  // namespace aerosurrogate
