#pragma once

// Binary "SFM1" matrix files and CSV import/export.
//
// Layout (all little-endian):
//   "SFM1" | u64 rows | u64 cols | rows*cols f64, row-major
//   | u64 n_conditions | n_conditions * (f64 mach, f64 alpha)
//   | u64 n_chord | u64 n_span
//
// Parameter matrices inside model bundles use the same layout with no
// conditions and a 0 x 0 grid.

#include "aerosurrogate/common.hpp"
#include "aerosurrogate/dataset.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace aerosurrogate {

inline constexpr std::array<char, 4> kMatrixMagic{'S', 'F', 'M', '1'};

struct MatrixFile {
  Matrix values;
  std::vector<FlightCondition> conditions;
  std::uint64_t n_chord = 0;
  std::uint64_t n_span = 0;
};

namespace detail {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  } else {
    return v;
  }
}

class ByteWriter {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void u64(std::uint64_t v) {
    v = to_little(v);
    raw(&v, sizeof v);
  }
  void f64(double v) {
    auto bits = to_little(std::bit_cast<std::uint64_t>(v));
    raw(&bits, sizeof bits);
  }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<char>& buf, std::string origin)
      : buf_(buf), origin_(std::move(origin)) {}

  void raw(void* p, std::size_t n) {
    if (n > buf_.size() - pos_) throw FormatError(origin_ + ": truncated payload");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    raw(&v, sizeof v);
    return to_little(v);
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  const std::vector<char>& buf_;
  std::string origin_;
  std::size_t pos_ = 0;
};

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace detail

inline std::vector<char> encode_matrix_file(const MatrixFile& file) {
  detail::ByteWriter w;
  w.raw(kMatrixMagic.data(), kMatrixMagic.size());
  const auto& v = file.values;
  w.u64(static_cast<std::uint64_t>(v.rows()));
  w.u64(static_cast<std::uint64_t>(v.cols()));
  for (Index r = 0; r < v.rows(); ++r) {
    for (Index c = 0; c < v.cols(); ++c) w.f64(v(r, c));
  }
  w.u64(file.conditions.size());
  for (const auto& c : file.conditions) {
    w.f64(c.mach);
    w.f64(c.alpha);
  }
  w.u64(file.n_chord);
  w.u64(file.n_span);
  return w.bytes();
}

inline MatrixFile decode_matrix_file(const std::vector<char>& bytes, const std::string& origin) {
  detail::ByteReader r(bytes, origin);
  std::array<char, 4> magic{};
  r.raw(magic.data(), magic.size());
  if (magic != kMatrixMagic) throw FormatError(origin + ": bad magic bytes");

  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  constexpr std::uint64_t kMaxExtent = std::uint64_t{1} << 40;
  if (rows > kMaxExtent || cols > kMaxExtent) throw FormatError(origin + ": dimension overflow");
  // the payload must fit in what is left of the file
  if (rows != 0 && cols > r.remaining() / 8 / rows) {
    throw FormatError(origin + ": dimensions exceed file size");
  }
  MatrixFile out;
  out.values.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::uint64_t i = 0; i < rows; ++i) {
    for (std::uint64_t j = 0; j < cols; ++j) {
      out.values(static_cast<Index>(i), static_cast<Index>(j)) = r.f64();
    }
  }
  const std::uint64_t n_cond = r.u64();
  if (n_cond > r.remaining() / 16) throw FormatError(origin + ": condition count exceeds file size");
  out.conditions.resize(n_cond);
  for (auto& c : out.conditions) {
    c.mach = r.f64();
    c.alpha = r.f64();
  }
  out.n_chord = r.u64();
  out.n_span = r.u64();
  if (r.remaining() != 0) throw FormatError(origin + ": trailing bytes after payload");
  return out;
}

inline void write_matrix_file(const std::filesystem::path& path, const MatrixFile& file) {
  detail::write_file(path, encode_matrix_file(file));
}

inline MatrixFile read_matrix_file(const std::filesystem::path& path) {
  return decode_matrix_file(detail::read_file(path), path.string());
}

inline void save_matrix(const FieldMatrix& m, const std::filesystem::path& path) {
  m.validate();
  write_matrix_file(path, {m.values, m.conditions, m.grid.n_chord, m.grid.n_span});
}

inline FieldMatrix load_matrix(const std::filesystem::path& path) {
  MatrixFile f = read_matrix_file(path);
  FieldMatrix m{std::move(f.values), std::move(f.conditions), {f.n_chord, f.n_span}};
  if (static_cast<std::size_t>(m.values.cols()) != m.conditions.size() ||
      static_cast<std::uint64_t>(m.values.rows()) != m.grid.n_chord * m.grid.n_span ||
      m.grid.n_chord < 2 || m.grid.n_span < 2) {
    throw FormatError(path.string() + ": header does not describe a field matrix");
  }
  return m;
}

/// Plain parameter matrix (no conditions, no grid).
inline void save_array(const Matrix& m, const std::filesystem::path& path) {
  write_matrix_file(path, {m, {}, 0, 0});
}

inline Matrix load_array(const std::filesystem::path& path) {
  return read_matrix_file(path).values;
}

inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), end};
}

inline double parse_double(std::string_view s, const std::string& what) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    throw FormatError("cannot parse number '" + std::string(s) + "' in " + what);
  }
  return v;
}

inline std::string condition_label(const FlightCondition& c) {
  return "M" + format_double(c.mach) + "_a" + format_double(c.alpha);
}

/// CSV with header `xi,eta,M<mach>_a<alpha>,...` and one row per grid point.
inline void export_csv(const FieldMatrix& m, const std::filesystem::path& path) {
  m.validate();
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "xi,eta";
  for (const auto& c : m.conditions) out << ',' << condition_label(c);
  out << '\n';
  for (std::uint64_t j = 0; j < m.grid.n_span; ++j) {
    for (std::uint64_t i = 0; i < m.grid.n_chord; ++i) {
      out << format_double(m.grid.xi(i)) << ',' << format_double(m.grid.eta(j));
      const auto row = static_cast<Index>(m.grid.row(i, j));
      for (Index c = 0; c < m.cols(); ++c) out << ',' << format_double(m.values(row, c));
      out << '\n';
    }
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

inline FieldMatrix import_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty CSV");
  const auto header = split(line);
  if (header.size() < 3 || header[0] != "xi" || header[1] != "eta") {
    throw FormatError(path.string() + ": expected header xi,eta,<conditions>");
  }
  FieldMatrix m;
  for (std::size_t k = 2; k < header.size(); ++k) {
    const auto& h = header[k];
    const auto sep = h.find("_a");
    if (h.empty() || h[0] != 'M' || sep == std::string::npos) {
      throw FormatError(path.string() + ": bad condition column '" + h + "'");
    }
    m.conditions.push_back({parse_double(std::string_view(h).substr(1, sep - 1), path.string()),
                            parse_double(std::string_view(h).substr(sep + 2), path.string())});
  }
  std::vector<std::vector<double>> rows;
  std::vector<double> xis, etas;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw FormatError(path.string() + ": ragged CSV row");
    xis.push_back(parse_double(cells[0], path.string()));
    etas.push_back(parse_double(cells[1], path.string()));
    std::vector<double> vals;
    for (std::size_t k = 2; k < cells.size(); ++k) vals.push_back(parse_double(cells[k], path.string()));
    rows.push_back(std::move(vals));
  }
  std::size_t n_chord = 0;
  while (n_chord < etas.size() && etas[n_chord] == etas[0]) ++n_chord;
  if (n_chord < 2 || rows.size() % n_chord != 0) {
    throw FormatError(path.string() + ": rows do not form a structured grid");
  }
  m.grid = {n_chord, rows.size() / n_chord};
  m.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(m.conditions.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < m.conditions.size(); ++c) {
      m.values(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
  }
  m.validate();
  return m;
}

}  // namespace aerosurrogate
