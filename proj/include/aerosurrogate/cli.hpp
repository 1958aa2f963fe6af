#pragma once

// Command-line driver. `run` parses arguments, dispatches a subcommand and
// maps errors onto the exit-code contract.

#include "aerosurrogate/bundle_io.hpp"
#include "aerosurrogate/matrix_io.hpp"
#include "aerosurrogate/run_config.hpp"
#include "aerosurrogate/surrogate.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace aerosurrogate::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kIo = 3, kTraining = 4, kBundle = 5 };

inline constexpr int kSweepSchemaVersion = 1;
inline constexpr std::array<double, 3> kSliceEtas{0.1, 0.5, 0.9};

struct Options {
  std::string config_path;
  std::string data_path;
  std::string out_path;
  std::string bundle_path;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  bool quiet = false;
  bool benchmark = false;
  double mach = 0.0;
  double alpha = 0.0;
};

/// Progress messages to stderr unless --quiet.
class Log {
 public:
  Log(std::ostream& out, bool quiet) : out_(out), quiet_(quiet) {}

  template <typename... Args>
  void info(const Args&... args) {
    if (quiet_) return;
    std::lock_guard lock(mutex_);
    (out_ << ... << args) << '\n';
  }

  template <typename... Args>
  void warn(const Args&... args) {
    std::lock_guard lock(mutex_);
    out_ << "warning: ";
    (out_ << ... << args) << '\n';
  }

  template <typename... Args>
  void error(const Args&... args) {
    std::lock_guard lock(mutex_);
    out_ << "error: ";
    (out_ << ... << args) << '\n';
  }

 private:
  std::ostream& out_;
  bool quiet_;
  std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// CSV helpers

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  detail::write_file(path, std::vector<char>(text.begin(), text.end()));
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create directory " + dir.string() + ": " + ec.message());
}

inline const char* split_label(bool is_train) { return is_train ? "train" : "test"; }

struct MetricsRow {
  std::string model;
  double beta = 0.0;
  Index d = 0;
  std::string split;
  MetricsReport report;
};

inline std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << "model,beta,d,split,mae,rmse,r2\n";
  for (const auto& r : rows) {
    out << r.model << ',' << format_double(r.beta) << ',' << r.d << ',' << r.split << ','
        << format_double(r.report.mae) << ',' << format_double(r.report.rmse) << ','
        << format_double(r.report.r2) << '\n';
  }
  return out.str();
}

inline std::string history_csv(const TrainHistory& h) {
  std::ostringstream out;
  out << "epoch,total,rec,kl\n";
  for (std::size_t e = 0; e < h.total.size(); ++e) {
    out << e + 1 << ',' << format_double(h.total[e]) << ',' << format_double(h.rec[e]) << ','
        << format_double(h.kl[e]) << '\n';
  }
  return out.str();
}

inline std::string loss_csv(const std::vector<double>& losses) {
  std::ostringstream out;
  out << "epoch,mse\n";
  for (std::size_t e = 0; e < losses.size(); ++e) out << e + 1 << ',' << format_double(losses[e]) << '\n';
  return out.str();
}

inline void append_evaluation(std::vector<MetricsRow>& rows, const SurrogateBundle& b,
                              const BundleEvaluation& ev) {
  const double beta = b.vae.beta;
  const Index d = b.vae.latent_dim;
  for (const auto& [label, split] : {std::pair{"train", &ev.train}, std::pair{"test", &ev.test}}) {
    if (std::string(label) == "test" && b.split.test.empty()) continue;
    rows.push_back({"autoencoder", beta, d, label, split->autoencoder});
    rows.push_back({"surrogate", beta, d, label, split->surrogate});
    if (split->tuned) rows.push_back({"surrogate_finetuned", beta, d, label, *split->tuned});
  }
}

// ---------------------------------------------------------------------------
// Shared loading

inline RunConfig load_run_config(const Options& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) {
    const auto bytes = detail::read_file(o.config_path);
    cfg = parse_run_config(std::string_view(bytes.data(), bytes.size()), o.config_path);
  }
  if (o.seed) cfg.seed = *o.seed;
  cfg.synchronize();
  cfg.validate();
  return cfg;
}

inline FieldMatrix load_data(const Options& o) {
  if (o.data_path.empty()) throw InvalidArgument("--data is required");
  FieldMatrix data = load_matrix(o.data_path);
  data.validate();
  return data;
}

inline SurrogateBundle open_bundle(const Options& o) {
  if (o.bundle_path.empty()) throw InvalidArgument("--bundle is required");
  return load_bundle(o.bundle_path);
}

inline std::filesystem::path output_dir(const Options& o) {
  if (o.out_path.empty()) throw InvalidArgument("--out is required");
  ensure_directory(o.out_path);
  return o.out_path;
}

inline SplitIndices run_split(const RunConfig& cfg, const FieldMatrix& data) {
  return split_dataset(static_cast<std::size_t>(data.cols()), cfg.train_fraction,
                       cfg.stream_seed(RunStream::kSplit));
}

// ---------------------------------------------------------------------------
// Subcommands

inline FieldMatrix generate_dataset(const RunConfig& cfg) {
  const auto conditions = sample_envelope(cfg.dataset.n_conditions, cfg.dataset.envelope,
                                          cfg.stream_seed(RunStream::kDesign), cfg.dataset.jitter);
  return generate_synthetic(cfg.dataset.grid, conditions, cfg.dataset.noise_std,
                            cfg.stream_seed(RunStream::kNoise));
}

inline int cmd_gen_data(const Options& o, Log& log) {
  const RunConfig cfg = load_run_config(o);
  if (o.out_path.empty()) throw InvalidArgument("--out is required");
  const FieldMatrix data = generate_dataset(cfg);
  const std::filesystem::path out(o.out_path);
  if (out.has_parent_path()) ensure_directory(out.parent_path());
  save_matrix(data, out);
  const auto& e = cfg.dataset.envelope;
  log.info("wrote ", out.string(), ": q = ", data.rows(), ", n = ", data.cols(), ", M in [",
           e.mach_min, ", ", e.mach_max, "], alpha in [", e.alpha_min, ", ", e.alpha_max, "]");
  return kOk;
}

inline int cmd_train(const Options& o, Log& log) {
  const RunConfig cfg = load_run_config(o);
  const FieldMatrix data = load_data(o);
  const auto out = output_dir(o);
  const SplitIndices split = run_split(cfg, data);
  log.info("training ", cfg.pipeline.use_pca ? "PCA+" : "", "beta-VAE surrogate (beta = ",
           cfg.pipeline.beta, ", d = ", cfg.pipeline.latent_dim, ") on ", split.train.size(),
           " samples");
  const SurrogateBundle b = train_surrogate(data, split, cfg.pipeline);
  save_bundle(b, out / "bundle");
  write_text(out / "history.csv", history_csv(b.history));
  std::vector<MetricsRow> rows;
  append_evaluation(rows, b, evaluate_bundle(b, data));
  write_text(out / "metrics.csv", metrics_csv(rows));
  log.info("wrote bundle and metrics to ", out.string());
  return kOk;
}

struct CellOutcome {
  bool ok = false;
  std::string error;
  int exit_code = kOk;
  MetricsReport recon;
  MetricsReport surrogate;
  std::vector<double> nrmse;
  std::vector<Index> ranking;
  std::vector<double> zeroing_errors;
};

inline CellOutcome run_cell(const RunConfig& cfg, const SweepCell& cell, const FieldMatrix& data,
                            const SplitIndices& split, const std::filesystem::path& out) {
  CellOutcome r;
  try {
    const SurrogateBundle b = train_surrogate(data, split, cfg.cell_pipeline(cell));
    const BundleEvaluation ev = evaluate_bundle(b, data);
    const SplitEvaluation& test = split.test.empty() ? ev.train : ev.test;
    r.recon = test.autoencoder;
    r.surrogate = test.surrogate;
    r.nrmse = test.nrmse;
    const Matrix train_rep = to_representation(b, select_columns(data.values, split.train));
    r.zeroing_errors = latent_zeroing_errors(b.vae, train_rep);
    r.ranking = rank_latents(b.vae, train_rep);
    if (cfg.sweep.keep_bundles) {
      save_bundle(b, out / "cells" / ("cell_" + std::to_string(cell.index)));
    }
    r.ok = true;
  } catch (const DivergenceError& e) {
    r.error = e.what();
    r.exit_code = kTraining;
  } catch (const FitError& e) {
    r.error = e.what();
    r.exit_code = kTraining;
  } catch (const FormatError& e) {
    r.error = e.what();
    r.exit_code = kIo;
  } catch (const std::exception& e) {
    r.error = e.what();
    r.exit_code = kTraining;
  }
  return r;
}

template <typename T, typename Fmt>
std::string join(const std::vector<T>& v, Fmt fmt) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + fmt(v[i]);
  return s;
}

inline std::string sweep_csv(const std::vector<SweepCell>& cells, const std::vector<CellOutcome>& results) {
  std::ostringstream out;
  out << "schema_version,cell,use_pca,beta,d,status,recon_rmse_test,recon_sample_rmse_mean_test,"
         "surrogate_mae_test,"
         "surrogate_rmse_test,surrogate_r2_test,nrmse_mean_test,nrmse_median_test,"
         "nrmse_q90_test,latent_ranking,zeroing_errors,error\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    const auto& r = results[i];
    out << kSweepSchemaVersion << ',' << c.index << ',' << (c.use_pca ? 1 : 0) << ','
        << format_double(c.beta) << ',' << c.latent_dim << ',' << (r.ok ? "ok" : "failed") << ',';
    if (r.ok) {
      out << format_double(r.recon.rmse) << ',' << format_double(mean_of(r.recon.sample_rmse))
          << ',' << format_double(r.surrogate.mae) << ','
          << format_double(r.surrogate.rmse) << ',' << format_double(r.surrogate.r2) << ','
          << format_double(mean_of(r.nrmse)) << ',' << format_double(quantile(r.nrmse, 0.5))
          << ',' << format_double(quantile(r.nrmse, 0.9)) << ','
          << join(r.ranking, [](Index k) { return std::to_string(k); }) << ','
          << join(r.zeroing_errors, [](double v) { return format_double(v); })
          << ',';
    } else {
      out << ",,,,,,,,,,";
    }
    out << csv_quote(r.error) << '\n';
  }
  return out.str();
}

inline int cmd_sweep(const Options& o, Log& log) {
  const RunConfig cfg = load_run_config(o);
  const FieldMatrix data = load_data(o);
  const auto out = output_dir(o);
  const SplitIndices split = run_split(cfg, data);
  const auto cells = cfg.sweep_cells();
  std::vector<CellOutcome> results(cells.size());

  const unsigned workers = std::max(1u, std::min<unsigned>(o.jobs, static_cast<unsigned>(cells.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto& c = cells[i];
      const auto t0 = std::chrono::steady_clock::now();
      results[i] = run_cell(cfg, c, data, split, out);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (results[i].ok) {
        log.info("cell ", c.index + 1, "/", cells.size(), " pca=", c.use_pca, " beta=", c.beta,
                 " d=", c.latent_dim, ": test recon RMSE ", results[i].recon.rmse, " (", secs, " s)");
      } else {
        log.error("cell ", c.index + 1, "/", cells.size(), " failed: ", results[i].error);
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  write_text(out / "sweep.csv", sweep_csv(cells, results));
  int code = kOk;
  for (const auto& r : results) {
    if (!r.ok) code = std::max(code, r.exit_code);
  }
  log.info("wrote ", (out / "sweep.csv").string());
  return code;
}

inline std::string sample_errors_csv(const SurrogateBundle& b, const FieldMatrix& data,
                                     const BundleEvaluation& ev) {
  std::ostringstream out;
  out << "sample,split,mach,alpha,autoencoder_mae,surrogate_mae,surrogate_finetuned_mae,nrmse\n";
  const Vector mu_bar = training_latent_mean(b, data);
  for (const auto& [label, idx, split] :
       {std::tuple{"train", &b.split.train, &ev.train}, std::tuple{"test", &b.split.test, &ev.test}}) {
    if (idx->empty()) continue;
    const Matrix truth = select_columns(data.values, *idx);
    const auto conds = select_conditions(data.conditions, *idx);
    const Matrix ae = reconstruct_fields(b, truth);
    const Matrix mu_hat = predict_latents(b, conds);
    const Matrix sur = decode_fields(b, mu_hat, DecoderChoice::kOriginal);
    const Matrix tuned = decode_fields(b, mu_hat, DecoderChoice::kPreferFineTuned);
    for (std::size_t k = 0; k < idx->size(); ++k) {
      const auto c = static_cast<Index>(k);
      out << (*idx)[k] << ',' << label << ',' << format_double(conds[k].mach) << ','
          << format_double(conds[k].alpha) << ','
          << format_double((ae.col(c) - truth.col(c)).cwiseAbs().mean()) << ','
          << format_double((sur.col(c) - truth.col(c)).cwiseAbs().mean()) << ',';
      if (b.fine_tuned_decoder) out << format_double((tuned.col(c) - truth.col(c)).cwiseAbs().mean());
      out << ',' << format_double(split->nrmse[k]) << '\n';
    }
  }
  return out.str();
}

inline void check_data_matches(const SurrogateBundle& b, const FieldMatrix& data) {
  require(data.rows() == b.field_dim && data.grid == b.grid,
          "data grid does not match the bundle's grid");
  const auto n = data.cols();
  for (auto idx : {&b.split.train, &b.split.test}) {
    for (Index i : *idx) require(i < n, "data has fewer samples than the bundle's split references");
  }
}

inline int cmd_evaluate(const Options& o, Log& log) {
  const SurrogateBundle b = open_bundle(o);
  const FieldMatrix data = load_data(o);
  check_data_matches(b, data);
  const auto out = output_dir(o);
  const BundleEvaluation ev = evaluate_bundle(b, data);
  std::vector<MetricsRow> rows;
  append_evaluation(rows, b, ev);
  if (o.benchmark) {
    log.info("training direct MLP benchmark");
    const MlpBenchmark bench =
        train_mlp_benchmark(b, data, b.split, benchmark_architecture(b), b.config.train);
    for (const auto& [label, idx] : {std::pair{"train", &b.split.train}, std::pair{"test", &b.split.test}}) {
      if (idx->empty()) continue;
      const Matrix truth = select_columns(data.values, *idx);
      const Matrix pred = predict_benchmark(b, bench, select_conditions(data.conditions, *idx));
      rows.push_back({"mlp_benchmark", b.vae.beta, b.vae.latent_dim, label, evaluate_metrics(pred, truth)});
    }
  }
  write_text(out / "metrics.csv", metrics_csv(rows));
  write_text(out / "sample_errors.csv", sample_errors_csv(b, data, ev));
  log.info("wrote evaluation to ", out.string());
  return kOk;
}

inline int cmd_fine_tune(const Options& o, Log& log) {
  const SurrogateBundle b = open_bundle(o);
  const FieldMatrix data = load_data(o);
  check_data_matches(b, data);
  const auto out = output_dir(o);
  log.info("fine-tuning decoder for ", b.config.fine_tune.epochs, " epochs");
  const SurrogateBundle tuned = fine_tune_decoder(b, data, b.split, b.config.fine_tune);
  save_bundle(tuned, out / "bundle");
  write_text(out / "fine_tune_history.csv", loss_csv(tuned.fine_tune_history));
  std::vector<MetricsRow> rows;
  append_evaluation(rows, tuned, evaluate_bundle(tuned, data));
  write_text(out / "metrics.csv", metrics_csv(rows));
  log.info("wrote fine-tuned bundle and metrics to ", out.string());
  return kOk;
}

/// Cp along the chord at span station eta, interpolated linearly between grid rows.
inline Vector chordwise_slice(const GridSpec& grid, const Vector& field, double eta) {
  const double pos = std::clamp(eta, 0.0, 1.0) * static_cast<double>(grid.n_span - 1);
  const auto j0 = std::min<std::uint64_t>(static_cast<std::uint64_t>(pos), grid.n_span - 2);
  const double t = pos - static_cast<double>(j0);
  Vector out(static_cast<Index>(grid.n_chord));
  for (std::uint64_t i = 0; i < grid.n_chord; ++i) {
    const double lo = field(static_cast<Index>(grid.row(i, j0)));
    const double hi = field(static_cast<Index>(grid.row(i, j0 + 1)));
    out(static_cast<Index>(i)) = (1.0 - t) * lo + t * hi;
  }
  return out;
}

inline int cmd_predict(const Options& o, Log& log) {
  const SurrogateBundle b = open_bundle(o);
  const auto out = output_dir(o);
  require(std::isfinite(o.mach) && std::isfinite(o.alpha), "--mach and --alpha must be finite");
  const std::vector<FlightCondition> cond{{o.mach, o.alpha}};
  const CpPrediction p = predict_cp(b, cond);
  if (p.any_out_of_envelope()) {
    log.warn("(M, alpha) = (", o.mach, ", ", o.alpha,
              ") lies outside the training envelope; prediction is an extrapolation");
  }
  const Vector field = p.fields.col(0);

  std::ostringstream f;
  f << "xi,eta,cp\n";
  for (std::uint64_t j = 0; j < b.grid.n_span; ++j) {
    for (std::uint64_t i = 0; i < b.grid.n_chord; ++i) {
      f << format_double(b.grid.xi(i)) << ',' << format_double(b.grid.eta(j)) << ','
        << format_double(field(static_cast<Index>(b.grid.row(i, j)))) << '\n';
    }
  }
  write_text(out / "field.csv", f.str());

  std::ostringstream s;
  s << "xi";
  std::vector<Vector> slices;
  for (double eta : kSliceEtas) {
    s << ",cp_eta" << format_double(eta);
    slices.push_back(chordwise_slice(b.grid, field, eta));
  }
  s << '\n';
  for (std::uint64_t i = 0; i < b.grid.n_chord; ++i) {
    s << format_double(b.grid.xi(i));
    for (const auto& sl : slices) s << ',' << format_double(sl(static_cast<Index>(i)));
    s << '\n';
  }
  write_text(out / "slices.csv", s.str());

  std::ostringstream l;
  l << "mach,alpha,out_of_envelope";
  for (Index k = 0; k < p.latents.rows(); ++k) l << ",mu" << k + 1;
  l << '\n' << format_double(o.mach) << ',' << format_double(o.alpha) << ','
    << (p.out_of_envelope[0] ? 1 : 0);
  for (Index k = 0; k < p.latents.rows(); ++k) l << ',' << format_double(p.latents(k, 0));
  l << '\n';
  write_text(out / "latent.csv", l.str());
  log.info("wrote prediction for (M, alpha) = (", o.mach, ", ", o.alpha, ") to ", out.string());
  return kOk;
}

inline int cmd_export_latent(const Options& o, Log& log) {
  const SurrogateBundle b = open_bundle(o);
  const FieldMatrix data = load_data(o);
  check_data_matches(b, data);
  const auto out = output_dir(o);
  const LatentSummary s = export_latent_summary(b, data);

  std::ostringstream rows;
  rows << "sample,mach,alpha";
  for (Index k = 0; k < b.vae.latent_dim; ++k) rows << ",mu" << k + 1;
  rows << ",split,is_hull_vertex\n";
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    const auto& r = s.rows[i];
    rows << i << ',' << format_double(r.condition.mach) << ',' << format_double(r.condition.alpha);
    for (Index k = 0; k < r.mu.size(); ++k) rows << ',' << format_double(r.mu(k));
    rows << ',' << split_label(r.is_train) << ',' << (r.is_hull_vertex ? 1 : 0) << '\n';
  }
  write_text(out / "latent_summary.csv", rows.str());

  std::ostringstream rank;
  rank << "rank,latent,zeroing_error\n";
  for (std::size_t i = 0; i < s.ranking.size(); ++i) {
    const auto k = s.ranking[i];
    rank << i + 1 << ",mu" << k + 1 << ','
         << format_double(s.zeroing_errors[static_cast<std::size_t>(k)]) << '\n';
  }
  write_text(out / "latent_ranking.csv", rank.str());

  if (!s.hull.empty()) {
    std::ostringstream hull;
    hull << "order,sample,mu1,mu2\n";
    for (std::size_t i = 0; i < s.hull.size(); ++i) {
      const auto& r = s.rows[s.hull[i]];
      hull << i << ',' << s.hull[i] << ',' << format_double(r.mu(0)) << ',' << format_double(r.mu(1))
           << '\n';
    }
    write_text(out / "latent_hull.csv", hull.str());
  }
  log.info("wrote latent summary for ", s.rows.size(), " samples to ", out.string());
  return kOk;
}

// ---------------------------------------------------------------------------
// Entry point

inline int exit_code_for(const std::exception_ptr& ep, Log& log) {
  try {
    std::rethrow_exception(ep);
  } catch (const BundleError& e) {
    log.error(e.what());
    return kBundle;
  } catch (const InvalidArgument& e) {
    log.error(e.what());
    return kConfig;
  } catch (const FormatError& e) {
    log.error(e.what());
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    log.error(e.what());
    return kIo;
  } catch (const DivergenceError& e) {
    log.error(e.what());
    return kTraining;
  } catch (const FitError& e) {
    log.error(e.what());
    return kTraining;
  } catch (const IndefiniteKernel& e) {
    log.error(e.what());
    return kTraining;
  } catch (const std::exception& e) {
    log.error(e.what());
    return kTraining;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"Aerodynamic pressure-field surrogate: PCA, beta-VAE and Gaussian-process regression",
               "aerosurrogate"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON run configuration");
    sub->add_option("--seed", seed, "Base seed (overrides the configuration)");
    sub->add_flag("--quiet", o.quiet, "Suppress progress messages");
  };
  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic pressure-field matrix");
  add_common(gen);
  gen->add_option("--out", o.out_path, "Output matrix file")->required();

  auto* train = app.add_subcommand("train", "Train a surrogate and write its bundle and metrics");
  add_common(train);
  train->add_option("--data", o.data_path, "Input matrix file")->required();
  train->add_option("--out", o.out_path, "Output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Train over the beta x d x PCA grid");
  add_common(sweep);
  sweep->add_option("--data", o.data_path, "Input matrix file")->required();
  sweep->add_option("--out", o.out_path, "Output directory")->required();
  sweep->add_option("--jobs", o.jobs, "Parallel cells")->check(CLI::PositiveNumber);

  auto add_bundle = [&](CLI::App* sub, bool needs_data) {
    sub->add_option("--bundle", o.bundle_path, "Bundle directory")->required();
    if (needs_data) sub->add_option("--data", o.data_path, "Input matrix file")->required();
    sub->add_option("--out", o.out_path, "Output directory")->required();
    sub->add_flag("--quiet", o.quiet, "Suppress progress messages");
  };
  auto* evaluate = app.add_subcommand("evaluate", "Report autoencoder and surrogate errors");
  add_bundle(evaluate, true);
  evaluate->add_flag("--benchmark", o.benchmark, "Also train and score the direct MLP benchmark");
  auto* tune = app.add_subcommand("fine-tune", "Retrain the decoder on GPR-predicted latents");
  add_bundle(tune, true);
  auto* predict = app.add_subcommand("predict", "Predict the Cp field at one flight condition");
  add_bundle(predict, false);
  predict->add_option("--mach", o.mach, "Mach number")->required();
  predict->add_option("--alpha", o.alpha, "Angle of attack in degrees")->required();
  auto* latent = app.add_subcommand("export-latent", "Export latent means, ranking and hull");
  add_bundle(latent, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::ostringstream ignored;
    app.exit(e, ignored, err);
    return kConfig;
  }
  for (auto* sub : {gen, train, sweep}) {
    if (sub->parsed() && sub->count("--seed") > 0) o.seed = seed;
  }

  Log log(err, o.quiet);
  try {
    if (gen->parsed()) return cmd_gen_data(o, log);
    if (train->parsed()) return cmd_train(o, log);
    if (sweep->parsed()) return cmd_sweep(o, log);
    if (evaluate->parsed()) return cmd_evaluate(o, log);
    if (tune->parsed()) return cmd_fine_tune(o, log);
    if (predict->parsed()) return cmd_predict(o, log);
    if (latent->parsed()) return cmd_export_latent(o, log);
  } catch (...) {
    return exit_code_for(std::current_exception(), log);
  }
  return kConfig;
}

}  // namespace aerosurrogate::cli
