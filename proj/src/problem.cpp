#include "decman/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "decman/errors.hpp"

namespace decman {

// Problem -----------------------------------------------------------------

void Problem::check_agent(int agent) const {
  if (agent < 0 || agent >= agents()) {
    throw InvalidInput("agent index " + std::to_string(agent) + " out of range [0, " +
                       std::to_string(agents()) + ")");
  }
}

double Problem::objective(const Matrix& x, WorkerPool* pool) const {
  const int n = agents();
  std::vector<double> parts(n);
  auto body = [&](std::size_t i) { parts[i] = local_objective(static_cast<int>(i), x); };
  if (pool) {
    pool->parallel_for(n, body);
  } else {
    for (int i = 0; i < n; ++i) body(i);
  }
  double total = 0.0;
  for (const double v : parts) total += v;
  return total / n;
}

Matrix Problem::gradient(const Matrix& x, WorkerPool* pool) const {
  const int n = agents();
  std::vector<Matrix> parts(n);
  auto body = [&](std::size_t i) { parts[i] = local_gradient(static_cast<int>(i), x); };
  if (pool) {
    pool->parallel_for(n, body);
  } else {
    for (int i = 0; i < n; ++i) body(i);
  }
  Matrix total = Matrix::Zero(x.rows(), x.cols());
  for (const Matrix& g : parts) total += g;
  return total / n;
}

namespace {

std::vector<Matrix> grams(const std::vector<Matrix>& data) {
  std::vector<Matrix> out;
  out.reserve(data.size());
  for (const Matrix& a : data) out.push_back(a.transpose() * a);
  return out;
}

void check_data(const std::vector<Matrix>& data, const char* what) {
  if (data.empty()) throw InvalidInput(std::string(what) + ": no agents");
  for (const Matrix& a : data) {
    if (a.cols() != data.front().cols()) {
      throw InvalidInput(std::string(what) + ": agents disagree on the column count");
    }
    if (!a.allFinite()) throw InvalidInput(std::string(what) + ": non-finite data");
  }
}

void check_point_shape(const ManifoldSpec& spec, const Matrix& x) {
  if (x.rows() != spec.d() || x.cols() != spec.r()) {
    throw InvalidInput("point has shape " + std::to_string(x.rows()) + "x" +
                       std::to_string(x.cols()) + ", expected " + std::to_string(spec.d()) + "x" +
                       std::to_string(spec.r()));
  }
}

Eigen::Index data_cols(const std::vector<Matrix>& data) {
  return data.empty() ? 0 : data.front().cols();
}

}  // namespace

// PCA ---------------------------------------------------------------------

PcaProblem::PcaProblem(std::vector<Matrix> data, Eigen::Index r, GroundTruth truth)
    : Problem(ManifoldSpec::stiefel(data_cols(data), r), std::move(truth)), data_(std::move(data)) {
  check_data(data_, "pca");
  gram_ = grams(data_);
}

long PcaProblem::total_samples() const {
  long total = 0;
  for (const Matrix& a : data_) total += a.rows();
  return total;
}

double PcaProblem::local_objective(int agent, const Matrix& x) const {
  check_agent(agent);
  check_point_shape(spec_, x);
  return -0.5 * (x.transpose() * gram_[agent] * x).trace();
}

Matrix PcaProblem::local_gradient(int agent, const Matrix& x) const {
  check_agent(agent);
  check_point_shape(spec_, x);
  return -(gram_[agent] * x);
}

// GEVP --------------------------------------------------------------------

GevpProblem::GevpProblem(std::vector<Matrix> data, Matrix b, Eigen::Index r, GroundTruth truth,
                         std::optional<double> gamma)
    : Problem(ManifoldSpec::generalized_stiefel(std::move(b), r, gamma), std::move(truth)),
      data_(std::move(data)) {
  check_data(data_, "gevp");
  if (data_cols(data_) != spec_.d()) throw InvalidInput("gevp: B and A_i dimensions disagree");
  gram_ = grams(data_);
}

long GevpProblem::total_samples() const {
  long total = 0;
  for (const Matrix& a : data_) total += a.rows();
  return total;
}

double GevpProblem::local_objective(int agent, const Matrix& x) const {
  check_agent(agent);
  check_point_shape(spec_, x);
  return 0.5 * (x.transpose() * gram_[agent] * x).trace();
}

Matrix GevpProblem::local_gradient(int agent, const Matrix& x) const {
  check_agent(agent);
  check_point_shape(spec_, x);
  return gram_[agent] * x;
}

// LRMC --------------------------------------------------------------------

long ObservedBlock::observed() const {
  long total = 0;
  for (const auto& rows : row_index) total += static_cast<long>(rows.size());
  return total;
}

Matrix ObservedBlock::dense() const {
  Matrix a = Matrix::Zero(rows, cols());
  for (Eigen::Index c = 0; c < cols(); ++c) {
    for (std::size_t k = 0; k < row_index[c].size(); ++k) a(row_index[c][k], c) = values[c][k];
  }
  return a;
}

namespace {

Eigen::Index block_rows(const std::vector<ObservedBlock>& blocks) {
  return blocks.empty() ? 0 : blocks.front().rows;
}

}  // namespace

LrmcProblem::LrmcProblem(std::vector<ObservedBlock> blocks, Eigen::Index r, GroundTruth truth)
    : Problem(ManifoldSpec::stiefel(block_rows(blocks), r), std::move(truth)),
      blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw InvalidInput("lrmc: no agents");
  for (const ObservedBlock& b : blocks_) {
    if (b.rows != spec_.d()) throw InvalidInput("lrmc: agents disagree on the row count");
    if (b.values.size() != b.row_index.size()) throw InvalidInput("lrmc: malformed block");
    for (std::size_t c = 0; c < b.row_index.size(); ++c) {
      if (b.values[c].size() != b.row_index[c].size()) throw InvalidInput("lrmc: malformed block");
      for (const int row : b.row_index[c]) {
        if (row < 0 || row >= b.rows) throw InvalidInput("lrmc: observation index out of bounds");
      }
      for (const double v : b.values[c]) {
        if (!std::isfinite(v)) throw InvalidInput("lrmc: non-finite observation");
      }
    }
  }
}

long LrmcProblem::total_samples() const {
  long total = 0;
  for (const ObservedBlock& b : blocks_) total += b.cols();
  return total;
}

Matrix LrmcProblem::inner_solve(int agent, const Matrix& x) const {
  check_agent(agent);
  check_point_shape(spec_, x);
  const ObservedBlock& block = blocks_[agent];
  const Eigen::Index r = x.cols();
  Matrix v = Matrix::Zero(r, block.cols());
  for (Eigen::Index c = 0; c < block.cols(); ++c) {
    const auto& rows = block.row_index[c];
    if (rows.empty()) continue;
    const auto k = static_cast<Eigen::Index>(rows.size());
    Matrix sub(k, r);
    Vector rhs(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      sub.row(j) = x.row(rows[j]);
      rhs(j) = block.values[c][j];
    }
    v.col(c) = least_squares(sub, rhs);
  }
  return v;
}

double LrmcProblem::local_objective(int agent, const Matrix& x) const {
  const Matrix v = inner_solve(agent, x);
  const ObservedBlock& block = blocks_[agent];
  double total = 0.0;
  for (Eigen::Index c = 0; c < block.cols(); ++c) {
    for (std::size_t k = 0; k < block.row_index[c].size(); ++k) {
      const double res = x.row(block.row_index[c][k]).dot(v.col(c)) - block.values[c][k];
      total += res * res;
    }
  }
  return 0.5 * total;
}

Matrix LrmcProblem::local_gradient(int agent, const Matrix& x) const {
  const Matrix v = inner_solve(agent, x);
  const ObservedBlock& block = blocks_[agent];
  Matrix g = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < block.cols(); ++c) {
    for (std::size_t k = 0; k < block.row_index[c].size(); ++k) {
      const int row = block.row_index[c][k];
      const double res = x.row(row).dot(v.col(c)) - block.values[c][k];
      g.row(row).noalias() += res * v.col(c).transpose();
    }
  }
  return g;
}

// Generators --------------------------------------------------------------

double resolved_scale(const PcaParams& p) {
  if (p.scale > 0.0) return p.scale;
  return std::sqrt(static_cast<double>(p.n) * static_cast<double>(p.m_i));
}

std::vector<double> default_lambda_exponents(int d) {
  // 1, then 0.5, 1.0, ..., (d - 1) / 2 = d/2 - 0.5
  std::vector<double> e(d);
  for (int j = 1; j <= d; ++j) e[j - 1] = j == 1 ? 1.0 : 0.5 * (j - 1);
  return e;
}

double default_nu(int m, int T, int r) {
  return static_cast<double>(r) * (m + T - r) / (static_cast<double>(m) * T);
}

std::vector<Matrix> split_rows(const Matrix& a, int n) {
  if (n < 1 || a.rows() % n != 0) {
    throw InvalidInput("split_rows: " + std::to_string(a.rows()) + " rows do not split into " +
                       std::to_string(n) + " equal blocks");
  }
  const Eigen::Index block = a.rows() / n;
  std::vector<Matrix> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(a.middleRows(i * block, block));
  return out;
}

namespace {

void check_pca_params(const PcaParams& p) {
  if (p.n < 1 || p.m_i < 1 || p.d < 1 || p.r < 1 || p.r > p.d) {
    throw InvalidInput("pca generator: need n, m_i, d >= 1 and 1 <= r <= d");
  }
  if (static_cast<long>(p.n) * p.m_i < p.d) throw InvalidInput("pca generator: need n * m_i >= d");
  if (!(p.xi > 0.0 && p.xi <= 1.0)) throw InvalidInput("pca generator: xi must lie in (0, 1]");
}

struct SyntheticRows {
  std::vector<Matrix> blocks;
  Matrix v;  // right singular vectors of the assembled A
};

// A = U diag(scale xi^j) V^T from the SVD of a Gaussian matrix, rows shuffled.
SyntheticRows synthetic_rows(const PcaParams& p, Rng& rng) {
  const Eigen::Index rows = static_cast<Eigen::Index>(p.n) * p.m_i;
  const Matrix g = gaussian_matrix(rows, p.d, rng);
  const ThinSvd svd = thin_svd(g);
  const double scale = resolved_scale(p);
  Vector sigma(p.d);
  for (int j = 1; j <= p.d; ++j) sigma(j - 1) = scale * std::pow(p.xi, j);
  const Matrix a = svd.u * sigma.asDiagonal() * svd.v.transpose();

  std::vector<Eigen::Index> perm(rows);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix shuffled(rows, p.d);
  for (Eigen::Index i = 0; i < rows; ++i) shuffled.row(i) = a.row(perm[i]);
  return {split_rows(shuffled, p.n), svd.v};
}

}  // namespace

PcaProblem gen_pca_data(const PcaParams& p) {
  check_pca_params(p);
  Rng rng(p.seed);
  SyntheticRows data = synthetic_rows(p, rng);
  GroundTruth truth;
  truth.point = data.v.leftCols(p.r);
  const double scale = resolved_scale(p);
  double top = 0.0;
  for (int j = 1; j <= p.r; ++j) top += std::pow(p.xi, 2 * j);
  truth.value = -scale * scale * top / (2.0 * p.n);
  return PcaProblem(std::move(data.blocks), p.r, std::move(truth));
}

GeneralizedEig generalized_sym_eig(const Matrix& h, const Matrix& b) {
  if (h.rows() != b.rows() || h.cols() != b.cols() || h.rows() != h.cols()) {
    throw InvalidInput("generalized_sym_eig: dimension mismatch");
  }
  Eigen::LLT<Matrix> llt(sym(b));
  if (llt.info() != Eigen::Success) throw SingularityError("generalized_sym_eig: B is not SPD");
  const Matrix lower = llt.matrixL();
  const Matrix linv_h = lower.triangularView<Eigen::Lower>().solve(sym(h));
  const Matrix c = lower.triangularView<Eigen::Lower>().solve(linv_h.transpose());
  const SymEig eig = sym_eig(sym(c));
  const Matrix x = lower.transpose().triangularView<Eigen::Upper>().solve(eig.vectors);
  return {eig.values, x};
}

GevpProblem gen_gevp_data(const GevpParams& p) {
  check_pca_params(p.data);
  Rng rng(p.data.seed);
  SyntheticRows data = synthetic_rows(p.data, rng);
  const int d = p.data.d;
  std::vector<double> exps =
      p.lambda_exponents.empty() ? default_lambda_exponents(d) : p.lambda_exponents;
  if (static_cast<int>(exps.size()) != d) {
    throw InvalidInput("gevp generator: expected " + std::to_string(d) + " lambda exponents, got " +
                       std::to_string(exps.size()));
  }
  const Matrix q = random_orthogonal(d, rng);
  Vector lambda(d);
  for (int j = 0; j < d; ++j) lambda(j) = std::pow(1.1, exps[j]);
  const Matrix b = sym(q * lambda.asDiagonal() * q.transpose());

  Matrix h = Matrix::Zero(d, d);
  for (const Matrix& a : data.blocks) h += a.transpose() * a;
  const GeneralizedEig eig = generalized_sym_eig(h, b);
  GroundTruth truth;
  truth.point = eig.vectors.leftCols(p.data.r);
  truth.value = eig.values.head(p.data.r).sum() / (2.0 * p.data.n);
  return GevpProblem(std::move(data.blocks), b, p.data.r, std::move(truth), p.gamma);
}

LrmcProblem gen_lrmc_data(const LrmcParams& p) {
  if (p.n < 1 || p.m < 1 || p.T < p.n || p.r < 1 || p.r > p.m) {
    throw InvalidInput("lrmc generator: need n >= 1, T >= n, 1 <= r <= m");
  }
  const double nu = p.nu > 0.0 ? p.nu : default_nu(p.m, p.T, p.r);
  Rng rng(p.seed);
  const Matrix left = gaussian_matrix(p.m, p.r, rng);
  const Matrix right = gaussian_matrix(p.r, p.T, rng);
  const Matrix a = left * right;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<ObservedBlock> blocks(p.n);
  const int base = p.T / p.n;
  const int extra = p.T % p.n;
  int col = 0;
  for (int i = 0; i < p.n; ++i) {
    const int width = base + (i < extra ? 1 : 0);
    ObservedBlock& block = blocks[i];
    block.rows = p.m;
    block.row_index.resize(width);
    block.values.resize(width);
    for (int c = 0; c < width; ++c, ++col) {
      for (int row = 0; row < p.m; ++row) {
        if (unit(rng) <= nu) {
          block.row_index[c].push_back(row);
          block.values[c].push_back(a(row, col));
        }
      }
    }
  }
  GroundTruth truth;
  truth.point = thin_svd(left).u;
  truth.value = 0.0;
  return LrmcProblem(std::move(blocks), p.r, std::move(truth));
}

}  // namespace decman
