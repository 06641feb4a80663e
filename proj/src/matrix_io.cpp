#include "decman/matrix_io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "json.hpp"

#include "decman/errors.hpp"

namespace decman {

namespace fs = std::filesystem;

MatrixFormat parse_matrix_format(const std::string& name) {
  if (name == "csv") return MatrixFormat::Csv;
  if (name == "raw-binary" || name == "binary") return MatrixFormat::RawBinary;
  throw InvalidInput("unknown matrix format '" + name + "' (expected csv or raw-binary)");
}

namespace {

void append_double(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

double parse_double(std::string_view field, std::size_t line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw FormatError("cannot parse number '" + std::string(field) + "'", line);
  }
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

bool blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

std::string format_matrix_csv(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out.push_back(',');
      append_double(out, m(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

Matrix parse_matrix_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    std::vector<double> row;
    for (const auto field : split_fields(line)) row.push_back(parse_double(field, lineno));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("ragged row: " + std::to_string(row.size()) + " fields, expected " +
                            std::to_string(rows.front().size()),
                        lineno);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

std::string format_matrix_binary(const Matrix& m) {
  std::string out("DMAT");
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(m.rows()),
                                 static_cast<std::uint64_t>(m.cols())};
  out.append(reinterpret_cast<const char*>(dims), sizeof(dims));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.append(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
  return out;
}

Matrix parse_matrix_binary(const std::string& bytes) {
  constexpr std::size_t header = 4 + 2 * sizeof(std::uint64_t);
  if (bytes.size() < header || bytes.compare(0, 4, "DMAT") != 0) {
    throw FormatError("raw-binary matrix: missing DMAT header");
  }
  std::uint64_t dims[2];
  std::memcpy(dims, bytes.data() + 4, sizeof(dims));
  if (dims[1] != 0 && dims[0] > (bytes.size() - header) / sizeof(double) / dims[1]) {
    throw FormatError("raw-binary matrix: truncated payload");
  }
  if (bytes.size() != header + dims[0] * dims[1] * sizeof(double)) {
    throw FormatError("raw-binary matrix: payload size does not match header");
  }
  Matrix m(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
  const char* p = bytes.data() + header;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j, p += sizeof(double)) {
      std::memcpy(&m(i, j), p, sizeof(double));
    }
  }
  return m;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  out << contents;
  if (!out) throw InvalidInput("write failed for '" + path.string() + "'");
}

Matrix load_matrix(const fs::path& path, MatrixFormat format, double divide_by) {
  if (!(divide_by > 0.0)) throw InvalidInput("load_matrix: scale divisor must be positive");
  const std::string contents = read_file(path);
  Matrix m;
  try {
    m = format == MatrixFormat::Csv ? parse_matrix_csv(contents) : parse_matrix_binary(contents);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (divide_by != 1.0) m /= divide_by;
  return m;
}

void save_matrix(const fs::path& path, const Matrix& m, MatrixFormat format) {
  write_file(path, format == MatrixFormat::Csv ? format_matrix_csv(m) : format_matrix_binary(m));
}

// Bundles -------------------------------------------------------------------

namespace {

std::string agent_file(int i) { return "agent_" + std::to_string(i) + ".csv"; }

std::string format_triplets(const ObservedBlock& block) {
  std::string out;
  for (Eigen::Index c = 0; c < block.cols(); ++c) {
    for (std::size_t k = 0; k < block.row_index[c].size(); ++k) {
      out += std::to_string(block.row_index[c][k]);
      out.push_back(',');
      out += std::to_string(c);
      out.push_back(',');
      append_double(out, block.values[c][k]);
      out.push_back('\n');
    }
  }
  return out;
}

ObservedBlock parse_triplets(const std::string& text, Eigen::Index rows, Eigen::Index cols) {
  ObservedBlock block;
  block.rows = rows;
  block.row_index.resize(cols);
  block.values.resize(cols);
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3) throw FormatError("expected 'row,col,value'", lineno);
    const double row = parse_double(fields[0], lineno);
    const double col = parse_double(fields[1], lineno);
    if (row < 0 || row >= static_cast<double>(rows) || col < 0 || col >= static_cast<double>(cols) ||
        row != static_cast<int>(row) || col != static_cast<int>(col)) {
      throw FormatError("observation index out of range", lineno);
    }
    block.row_index[static_cast<int>(col)].push_back(static_cast<int>(row));
    block.values[static_cast<int>(col)].push_back(parse_double(fields[2], lineno));
  }
  return block;
}

}  // namespace

void write_bundle(const fs::path& dir, const Problem& problem, const BundleMeta& meta) {
  nlohmann::ordered_json j;
  j["kind"] = meta.kind;
  j["n"] = meta.n;
  j["d"] = meta.d;
  j["r"] = meta.r;
  j["m_i"] = meta.m_i;
  j["seed"] = meta.seed;
  j["xi"] = meta.xi;
  j["nu"] = meta.nu;
  if (problem.truth().value) j["f_star"] = *problem.truth().value;

  if (const auto* lrmc = dynamic_cast<const LrmcProblem*>(&problem)) {
    std::vector<Eigen::Index> widths;
    for (int i = 0; i < lrmc->agents(); ++i) {
      widths.push_back(lrmc->blocks()[i].cols());
      write_file(dir / agent_file(i), format_triplets(lrmc->blocks()[i]));
    }
    j["agent_cols"] = widths;
  } else if (const auto* pca = dynamic_cast<const PcaProblem*>(&problem)) {
    for (int i = 0; i < pca->agents(); ++i) save_matrix(dir / agent_file(i), pca->data()[i], MatrixFormat::Csv);
  } else if (const auto* gevp = dynamic_cast<const GevpProblem*>(&problem)) {
    for (int i = 0; i < gevp->agents(); ++i) save_matrix(dir / agent_file(i), gevp->data()[i], MatrixFormat::Csv);
    save_matrix(dir / "B.csv", gevp->b(), MatrixFormat::Csv);
  } else {
    throw InvalidInput("write_bundle: unsupported problem kind '" + problem.kind() + "'");
  }
  if (problem.truth().point) save_matrix(dir / "truth.csv", *problem.truth().point, MatrixFormat::Csv);
  write_file(dir / "meta.json", j.dump(2) + "\n");
}

BundleMeta read_bundle_meta(const fs::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(dir / "meta.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError((dir / "meta.json").string() + ": " + e.what());
  }
  BundleMeta meta;
  try {
    meta.kind = j.at("kind").get<std::string>();
    meta.n = j.at("n").get<int>();
    meta.d = j.at("d").get<int>();
    meta.r = j.at("r").get<int>();
    meta.m_i = j.at("m_i").get<int>();
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.xi = j.at("xi").get<double>();
    meta.nu = j.at("nu").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError((dir / "meta.json").string() + ": " + e.what());
  }
  return meta;
}

std::unique_ptr<Problem> read_bundle(const fs::path& dir) {
  const BundleMeta meta = read_bundle_meta(dir);
  const nlohmann::json j = nlohmann::json::parse(read_file(dir / "meta.json"));
  if (meta.n < 1) throw FormatError("bundle: n must be positive");
  GroundTruth truth;
  if (fs::exists(dir / "truth.csv")) truth.point = load_matrix(dir / "truth.csv", MatrixFormat::Csv);
  if (j.contains("f_star")) truth.value = j["f_star"].get<double>();

  if (meta.kind == "lrmc") {
    const auto widths = j.at("agent_cols").get<std::vector<Eigen::Index>>();
    if (static_cast<int>(widths.size()) != meta.n) throw FormatError("bundle: agent_cols length != n");
    std::vector<ObservedBlock> blocks;
    for (int i = 0; i < meta.n; ++i) {
      const fs::path file = dir / agent_file(i);
      try {
        blocks.push_back(parse_triplets(read_file(file), meta.d, widths[i]));
      } catch (const FormatError& e) {
        throw FormatError(file.string() + ": " + e.what());
      }
    }
    return std::make_unique<LrmcProblem>(std::move(blocks), meta.r, std::move(truth));
  }
  std::vector<Matrix> data;
  for (int i = 0; i < meta.n; ++i) data.push_back(load_matrix(dir / agent_file(i), MatrixFormat::Csv));
  if (meta.kind == "pca") return std::make_unique<PcaProblem>(std::move(data), meta.r, std::move(truth));
  if (meta.kind == "gevp") {
    Matrix b = load_matrix(dir / "B.csv", MatrixFormat::Csv);
    return std::make_unique<GevpProblem>(std::move(data), std::move(b), meta.r, std::move(truth));
  }
  throw FormatError("bundle: unknown kind '" + meta.kind + "'");
}

}  // namespace decman
