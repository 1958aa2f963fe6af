#pragma once

// Model bundle directory: manifest.json plus one SFM1 matrix file per
// parameter block. The manifest records a 64-bit FNV-1a digest of every
// component file; load_bundle verifies them.

#include "aerosurrogate/json_util.hpp"
#include "aerosurrogate/matrix_io.hpp"
#include "aerosurrogate/surrogate.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace aerosurrogate {

inline constexpr int kBundleFormatVersion = 1;
inline constexpr const char* kBundleFormatName = "aerosurrogate-bundle";

inline std::uint64_t fnv1a64(const std::vector<char>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace detail {

class BundleWriter {
 public:
  explicit BundleWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void put(const std::string& name, const Matrix& m) {
    const auto bytes = encode_matrix_file({m, {}, 0, 0});
    write_file(dir_ / name, bytes);
    files_[name] = hex64(fnv1a64(bytes));
  }

  void put_mlp(const std::string& prefix, const Mlp& net) {
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      put(prefix + "_layer" + std::to_string(l) + "_weight.sfm", net.layers()[l].weight);
      put(prefix + "_layer" + std::to_string(l) + "_bias.sfm", net.layers()[l].bias);
    }
  }

  const std::map<std::string, std::string>& files() const { return files_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> files_;
};

class BundleReader {
 public:
  BundleReader(std::filesystem::path dir, const nlohmann::json& files)
      : dir_(std::move(dir)), files_(files) {}

  Matrix get(const std::string& name) const {
    if (!files_.contains(name)) throw BundleError("bundle manifest does not list " + name);
    std::vector<char> bytes;
    try {
      bytes = read_file(dir_ / name);
    } catch (const FormatError& e) {
      throw BundleError(e.what());
    }
    if (hex64(fnv1a64(bytes)) != files_[name].get<std::string>()) {
      throw BundleError("digest mismatch for bundle file " + name);
    }
    try {
      return decode_matrix_file(bytes, (dir_ / name).string()).values;
    } catch (const FormatError& e) {
      throw BundleError(e.what());
    }
  }

  Vector get_vector(const std::string& name) const {
    Matrix m = get(name);
    if (m.cols() != 1) throw BundleError(name + ": expected a column vector");
    return m.col(0);
  }

  Mlp get_mlp(const std::string& prefix, const MlpArchitecture& arch) const {
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l <= arch.hidden_sizes.size(); ++l) {
      layers.push_back({get(prefix + "_layer" + std::to_string(l) + "_weight.sfm"),
                        get_vector(prefix + "_layer" + std::to_string(l) + "_bias.sfm")});
    }
    try {
      return Mlp(arch, std::move(layers));
    } catch (const InvalidArgument& e) {
      throw BundleError(prefix + ": " + e.what());
    }
  }

 private:
  std::filesystem::path dir_;
  const nlohmann::json& files_;
};

inline nlohmann::json arch_to_json(const MlpArchitecture& a) {
  return {{"input_dim", a.input_dim}, {"hidden", a.hidden_sizes}, {"output_dim", a.output_dim}};
}

inline MlpArchitecture arch_from_json(const nlohmann::json& j) {
  return {j.at("input_dim").get<Index>(), j.at("hidden").get<std::vector<Index>>(),
          j.at("output_dim").get<Index>()};
}

inline Matrix index_column(const std::vector<Index>& idx) {
  Matrix m(static_cast<Index>(idx.size()), 1);
  for (std::size_t i = 0; i < idx.size(); ++i) m(static_cast<Index>(i), 0) = static_cast<double>(idx[i]);
  return m;
}

inline std::vector<Index> index_list(const Matrix& m) {
  std::vector<Index> out;
  for (Index i = 0; i < m.size(); ++i) out.push_back(static_cast<Index>(m(i)));
  return out;
}

inline Matrix history_matrix(const TrainHistory& h) {
  Matrix m(static_cast<Index>(h.total.size()), 3);
  for (std::size_t e = 0; e < h.total.size(); ++e) {
    m(static_cast<Index>(e), 0) = h.total[e];
    m(static_cast<Index>(e), 1) = h.rec[e];
    m(static_cast<Index>(e), 2) = h.kl[e];
  }
  return m;
}

inline Matrix std_vector_column(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace detail

inline void save_bundle(const SurrogateBundle& b, const std::filesystem::path& dir) {
  b.check_dimensions();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FormatError("cannot create bundle directory " + dir.string() + ": " + ec.message());

  detail::BundleWriter w(dir);
  w.put("standardizer_mean.sfm", b.standardizer.mean);
  w.put("standardizer_scale.sfm", b.standardizer.scale);
  if (b.pca) {
    w.put("pca_mean.sfm", b.pca->mean);
    w.put("pca_components.sfm", b.pca->components);
    w.put("pca_variances.sfm", b.pca->variances);
    w.put("coordinate_scaler_mean.sfm", b.coordinate_scaler.mean);
    w.put("coordinate_scaler_scale.sfm", b.coordinate_scaler.scale);
  }
  w.put_mlp("encoder", b.vae.encoder);
  w.put_mlp("decoder", b.vae.decoder);
  if (b.fine_tuned_decoder) w.put_mlp("finetuned_decoder", *b.fine_tuned_decoder);

  const auto& g = b.gpr;
  const Index D = g.input_dim();
  Matrix params(g.outputs(), 2 * D + 2);
  for (Index o = 0; o < g.outputs(); ++o) {
    const auto& p = g.params[static_cast<std::size_t>(o)];
    params.row(o) << p.linear_weights.transpose(), p.matern_variance, p.lengthscales.transpose(),
        p.noise_variance;
  }
  Matrix bounds(2, D);
  bounds.row(0) = g.input_lower.transpose();
  bounds.row(1) = g.input_upper.transpose();
  w.put("gpr_bounds.sfm", bounds);
  w.put("gpr_inputs.sfm", g.inputs);
  w.put("gpr_targets.sfm", g.targets);
  w.put("gpr_params.sfm", params);
  w.put("gpr_weights.sfm", g.weights);
  w.put("gpr_log_ml.sfm", detail::std_vector_column(g.log_ml));
  for (std::size_t o = 0; o < g.factors.size(); ++o) {
    w.put("gpr_factor" + std::to_string(o) + ".sfm", g.factors[o]);
  }
  w.put("split_train.sfm", detail::index_column(b.split.train));
  w.put("split_test.sfm", detail::index_column(b.split.test));
  w.put("history.sfm", detail::history_matrix(b.history));
  if (!b.fine_tune_history.empty()) {
    w.put("fine_tune_history.sfm", detail::std_vector_column(b.fine_tune_history));
  }

  nlohmann::json manifest = {
      {"format", kBundleFormatName},
      {"format_version", kBundleFormatVersion},
      {"config", to_json(b.config)},
      {"grid", {b.grid.n_chord, b.grid.n_span}},
      {"field_dim", b.field_dim},
      {"latent_dim", b.vae.latent_dim},
      {"beta", b.vae.beta},
      {"encoder", detail::arch_to_json(b.vae.encoder.architecture())},
      {"decoder", detail::arch_to_json(b.vae.decoder.architecture())},
      {"pca", b.pca ? nlohmann::json{{"rank", b.pca->rank()},
                                     {"sign_convention", "largest-magnitude-entry-positive"}}
                    : nlohmann::json(nullptr)},
      {"has_fine_tuned_decoder", b.fine_tuned_decoder.has_value()},
      {"gpr", {{"inputs", D}, {"outputs", g.outputs()}, {"factors", g.factors.size()}}},
      {"files", w.files()}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw FormatError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
  if (!out) throw FormatError("write failed for manifest.json");
}

inline SurrogateBundle load_bundle(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw BundleError("missing bundle manifest " + manifest_path.string());
  std::stringstream ss;
  ss << in.rdbuf();

  nlohmann::json m;
  try {
    m = json_util::parse(ss.str(), manifest_path.string());
  } catch (const InvalidArgument& e) {
    throw BundleError(std::string("corrupt manifest: ") + e.what());
  }
  try {
    if (!m.is_object() || m.value("format", "") != kBundleFormatName) {
      throw BundleError("not a model bundle manifest: " + manifest_path.string());
    }
    if (!m.contains("format_version") || !m["format_version"].is_number_integer()) {
      throw BundleError("bundle manifest has no format_version");
    }
    if (m["format_version"].get<int>() != kBundleFormatVersion) {
      throw BundleError("unsupported bundle format_version " + m["format_version"].dump() +
                        " (expected " + std::to_string(kBundleFormatVersion) + ")");
    }

    SurrogateBundle b;
    from_json(m.at("config"), "manifest.config", b.config);
    const auto& grid = m.at("grid");
    b.grid = {grid.at(0).get<std::uint64_t>(), grid.at(1).get<std::uint64_t>()};
    b.field_dim = m.at("field_dim").get<Index>();

    const nlohmann::json& files = m.at("files");
    detail::BundleReader r(dir, files);
    b.standardizer.mean = r.get_vector("standardizer_mean.sfm");
    b.standardizer.scale = r.get_vector("standardizer_scale.sfm");
    if (!m.at("pca").is_null()) {
      PcaBasis basis;
      basis.mean = r.get_vector("pca_mean.sfm");
      basis.components = r.get("pca_components.sfm");
      basis.variances = r.get_vector("pca_variances.sfm");
      b.pca = std::move(basis);
      b.coordinate_scaler.mean = r.get_vector("coordinate_scaler_mean.sfm");
      b.coordinate_scaler.scale = r.get_vector("coordinate_scaler_scale.sfm");
    }
    b.vae.latent_dim = m.at("latent_dim").get<Index>();
    b.vae.beta = m.at("beta").get<double>();
    b.vae.encoder = r.get_mlp("encoder", detail::arch_from_json(m.at("encoder")));
    b.vae.decoder = r.get_mlp("decoder", detail::arch_from_json(m.at("decoder")));
    if (m.at("has_fine_tuned_decoder").get<bool>()) {
      b.fine_tuned_decoder = r.get_mlp("finetuned_decoder", detail::arch_from_json(m.at("decoder")));
    }

    auto& g = b.gpr;
    const Matrix bounds = r.get("gpr_bounds.sfm");
    if (bounds.rows() != 2) throw BundleError("gpr_bounds.sfm: expected 2 rows");
    g.input_lower = bounds.row(0).transpose();
    g.input_upper = bounds.row(1).transpose();
    g.inputs = r.get("gpr_inputs.sfm");
    g.targets = r.get("gpr_targets.sfm");
    g.weights = r.get("gpr_weights.sfm");
    const Matrix params = r.get("gpr_params.sfm");
    const Index D = g.inputs.cols();
    if (params.rows() != g.targets.cols() || params.cols() != 2 * D + 2) {
      throw BundleError("gpr_params.sfm: shape does not match the GPR dimensions");
    }
    for (Index o = 0; o < params.rows(); ++o) {
      g.params.push_back({params.row(o).head(D).transpose(), params(o, D),
                          params.row(o).segment(D + 1, D).transpose(), params(o, 2 * D + 1)});
      g.factors.push_back(r.get("gpr_factor" + std::to_string(o) + ".sfm"));
    }
    const Vector log_ml = r.get_vector("gpr_log_ml.sfm");
    g.log_ml.assign(log_ml.data(), log_ml.data() + log_ml.size());

    b.split.train = detail::index_list(r.get("split_train.sfm"));
    b.split.test = detail::index_list(r.get("split_test.sfm"));
    const Matrix hist = r.get("history.sfm");
    if (hist.cols() != 3) throw BundleError("history.sfm: expected 3 columns");
    for (Index e = 0; e < hist.rows(); ++e) {
      b.history.total.push_back(hist(e, 0));
      b.history.rec.push_back(hist(e, 1));
      b.history.kl.push_back(hist(e, 2));
    }
    if (files.contains("fine_tune_history.sfm")) {
      const Vector fh = r.get_vector("fine_tune_history.sfm");
      b.fine_tune_history.assign(fh.data(), fh.data() + fh.size());
    }
    try {
      b.check_dimensions();
    } catch (const InvalidArgument& e) {
      throw BundleError(std::string("inconsistent bundle: ") + e.what());
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw BundleError(std::string("corrupt manifest: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw BundleError(std::string("corrupt manifest: ") + e.what());
  }
}

}  // namespace aerosurrogate
