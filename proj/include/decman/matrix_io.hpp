#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "decman/problem.hpp"

namespace decman {

enum class MatrixFormat { Csv, RawBinary };

MatrixFormat parse_matrix_format(const std::string& name);

/// Comma-separated, one row per line, no header. Values are written in
/// shortest round-trip form, so save/load is bit exact.
std::string format_matrix_csv(const Matrix& m);
Matrix parse_matrix_csv(const std::string& text);

/// Raw binary layout: "DMAT", uint64 rows, uint64 cols, then rows*cols
/// float64 values in row-major order, all little-endian.
std::string format_matrix_binary(const Matrix& m);
Matrix parse_matrix_binary(const std::string& bytes);

/// Reads a dense matrix; every entry is divided by `divide_by` (e.g. 255 for
/// 8-bit image data).
Matrix load_matrix(const std::filesystem::path& path, MatrixFormat format, double divide_by = 1.0);
void save_matrix(const std::filesystem::path& path, const Matrix& m, MatrixFormat format);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

/// Header of a dataset bundle directory (meta.json).
struct BundleMeta {
  std::string kind;  // pca | gevp | lrmc
  int n = 0;
  int d = 0;
  int r = 0;
  int m_i = 0;
  std::uint64_t seed = 0;
  double xi = 0.0;
  double nu = 0.0;
};

/// Writes meta.json, one agent_<i>.csv per agent (dense rows for pca/gevp,
/// "row,col,value" observation triplets for lrmc), B.csv for gevp, and
/// truth.csv when the ground truth point is known.
void write_bundle(const std::filesystem::path& dir, const Problem& problem, const BundleMeta& meta);
std::unique_ptr<Problem> read_bundle(const std::filesystem::path& dir);
BundleMeta read_bundle_meta(const std::filesystem::path& dir);

}  // namespace decman
