#include "aerosurrogate/matrix_io.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace aerosurrogate;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "aerosurrogate_test_matrix_io";
  fs::create_directories(dir);
  return dir / name;
}

FieldMatrix small_field() {
  const std::vector<FlightCondition> conds{{0.62, 1.5}, {0.88, 10.25}, {0.7, 0.0}};
  return generate_synthetic({5, 3}, conds, 0.0, 1);
}

}  // namespace

TEST(MatrixFile, RoundTripIsBitExact) {
  const FieldMatrix m = small_field();
  const auto path = scratch("round_trip.sfm");
  save_matrix(m, path);
  const FieldMatrix back = load_matrix(path);
  EXPECT_EQ(back.values, m.values);
  EXPECT_EQ(back.conditions, m.conditions);
  EXPECT_EQ(back.grid, m.grid);
}

TEST(MatrixFile, LayoutIsHeaderPlusPayload) {
  const FieldMatrix m = small_field();
  const auto bytes = encode_matrix_file({m.values, m.conditions, m.grid.n_chord, m.grid.n_span});
  // magic, rows, cols, payload, condition count, pairs, n_chord, n_span
  const std::size_t expected = 4 + 8 + 8 + 15 * 3 * 8 + 8 + 3 * 16 + 8 + 8;
  EXPECT_EQ(bytes.size(), expected);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SFM1");
  // little-endian row count, then the first row-major value
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 15);
  double first = 0.0;
  std::memcpy(&first, bytes.data() + 20, sizeof first);
  EXPECT_EQ(first, m.values(0, 0));
  double second = 0.0;
  std::memcpy(&second, bytes.data() + 28, sizeof second);
  EXPECT_EQ(second, m.values(0, 1));
}

TEST(MatrixFile, DefaultDatasetSize) {
  const std::size_t q = 1152, n = 435;
  const std::size_t header = 4 + 8 + 8;
  const std::size_t trailer = 8 + n * 16 + 16;
  const Matrix values = Matrix::Zero(static_cast<Index>(q), static_cast<Index>(n));
  std::vector<FlightCondition> conds(n);
  EXPECT_EQ(encode_matrix_file({values, conds, 48, 24}).size(), header + q * n * 8 + trailer);
}

TEST(MatrixFile, RejectsCorruption) {
  const FieldMatrix m = small_field();
  auto bytes = encode_matrix_file({m.values, m.conditions, m.grid.n_chord, m.grid.n_span});

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_matrix_file(bad_magic, "t"), FormatError);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 5);
  EXPECT_THROW(decode_matrix_file(truncated, "t"), FormatError);

  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_matrix_file(trailing, "t"), FormatError);

  auto huge = bytes;
  for (int i = 0; i < 8; ++i) huge[4 + i] = static_cast<char>(0xff);
  EXPECT_THROW(decode_matrix_file(huge, "t"), FormatError);
}

TEST(MatrixFile, MismatchedGridIsRejectedOnLoad) {
  const FieldMatrix m = small_field();
  const auto path = scratch("bad_grid.sfm");
  write_matrix_file(path, {m.values, m.conditions, 4, 3});
  EXPECT_THROW(load_matrix(path), FormatError);
}

TEST(MatrixFile, MissingFileIsFormatError) {
  EXPECT_THROW(load_matrix(scratch("does_not_exist.sfm")), FormatError);
}

TEST(Csv, HeaderAndRoundTrip) {
  const FieldMatrix m = small_field();
  const auto path = scratch("field.csv");
  export_csv(m, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "xi,eta,M0.62_a1.5,M0.88_a10.25,M0.7_a0");
  const FieldMatrix back = import_csv(path);
  EXPECT_EQ(back.values, m.values);
  EXPECT_EQ(back.conditions, m.conditions);
  EXPECT_EQ(back.grid, m.grid);
}

TEST(Csv, RejectsMalformedInput) {
  const auto path = scratch("broken.csv");
  std::ofstream(path) << "x,eta,M0.5_a1\n0,0,1\n";
  EXPECT_THROW(import_csv(path), FormatError);
  std::ofstream(path, std::ios::trunc) << "xi,eta,M0.5_a1\n0,0,abc\n";
  EXPECT_THROW(import_csv(path), FormatError);
  std::ofstream(path, std::ios::trunc) << "xi,eta,M0.5_a1\n0,0\n";
  EXPECT_THROW(import_csv(path), FormatError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678}) {
    EXPECT_EQ(parse_double(format_double(v), "t"), v);
  }
  EXPECT_EQ(format_double(0.704), "0.704");
  EXPECT_THROW(parse_double("1.0x", "t"), FormatError);
}
