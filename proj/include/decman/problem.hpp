#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "decman/manifold.hpp"
#include "decman/parallel.hpp"

namespace decman {

struct GroundTruth {
  std::optional<Matrix> point;  // feasible minimizer x*, when known
  std::optional<double> value;  // optimal global objective f*, when known
};

/// Decentralized objective f(x) = (1/n) sum_i f_i(x) over a compact manifold.
/// Implementations are immutable after construction; per-agent evaluations
/// are safe to run concurrently.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string kind() const = 0;
  virtual int agents() const = 0;
  const ManifoldSpec& manifold() const { return spec_; }
  const GroundTruth& truth() const { return truth_; }

  /// sum_i m_i: data rows for PCA/GEVP, data columns for LRMC.
  virtual long total_samples() const = 0;

  virtual double local_objective(int agent, const Matrix& x) const = 0;
  /// Euclidean gradient of f_i at x.
  virtual Matrix local_gradient(int agent, const Matrix& x) const = 0;

  double objective(const Matrix& x, WorkerPool* pool = nullptr) const;
  /// (1/n) sum_i grad f_i(x), summed in agent order.
  Matrix gradient(const Matrix& x, WorkerPool* pool = nullptr) const;

 protected:
  Problem(ManifoldSpec spec, GroundTruth truth) : spec_(std::move(spec)), truth_(std::move(truth)) {}
  void check_agent(int agent) const;

  ManifoldSpec spec_;
  GroundTruth truth_;
};

/// f_i(x) = -1/2 tr(x^T A_i^T A_i x) on St(d, r).
class PcaProblem final : public Problem {
 public:
  PcaProblem(std::vector<Matrix> data, Eigen::Index r, GroundTruth truth = {});

  std::string kind() const override { return "pca"; }
  int agents() const override { return static_cast<int>(data_.size()); }
  long total_samples() const override;
  double local_objective(int agent, const Matrix& x) const override;
  /// -A_i^T (A_i x), evaluated through the cached Gram matrix A_i^T A_i.
  Matrix local_gradient(int agent, const Matrix& x) const override;

  const std::vector<Matrix>& data() const { return data_; }

 private:
  std::vector<Matrix> data_;
  std::vector<Matrix> gram_;
};

/// f_i(x) = 1/2 tr(x^T A_i^T A_i x) on St_B(d, r).
class GevpProblem final : public Problem {
 public:
  GevpProblem(std::vector<Matrix> data, Matrix b, Eigen::Index r, GroundTruth truth = {},
              std::optional<double> gamma = std::nullopt);

  std::string kind() const override { return "gevp"; }
  int agents() const override { return static_cast<int>(data_.size()); }
  long total_samples() const override;
  double local_objective(int agent, const Matrix& x) const override;
  Matrix local_gradient(int agent, const Matrix& x) const override;

  const std::vector<Matrix>& data() const { return data_; }
  const Matrix& b() const { return *manifold().b(); }

 private:
  std::vector<Matrix> data_;
  std::vector<Matrix> gram_;
};

/// Observed entries of one agent's column block: for each local column the
/// observed row indices (ascending) and values.
struct ObservedBlock {
  Eigen::Index rows = 0;
  std::vector<std::vector<int>> row_index;
  std::vector<std::vector<double>> values;

  Eigen::Index cols() const { return static_cast<Eigen::Index>(row_index.size()); }
  long observed() const;
  /// Dense m x T_i matrix with unobserved entries set to 0.
  Matrix dense() const;
};

/// f_i(X) = 1/2 ||P_Omega_i(X V_i(X) - A_i)||^2 on St(m, r), with
/// V_i(X) = argmin_V ||P_Omega_i(X V - A_i)|| solved column by column.
class LrmcProblem final : public Problem {
 public:
  LrmcProblem(std::vector<ObservedBlock> blocks, Eigen::Index r, GroundTruth truth = {});

  std::string kind() const override { return "lrmc"; }
  int agents() const override { return static_cast<int>(blocks_.size()); }
  long total_samples() const override;
  double local_objective(int agent, const Matrix& x) const override;
  /// P_Omega_i(X V_i - A_i) V_i^T, the envelope-theorem gradient.
  Matrix local_gradient(int agent, const Matrix& x) const override;

  /// r x T_i; columns without observations are zero.
  Matrix inner_solve(int agent, const Matrix& x) const;

  const std::vector<ObservedBlock>& blocks() const { return blocks_; }

 private:
  std::vector<ObservedBlock> blocks_;
};

// Generators --------------------------------------------------------------

struct PcaParams {
  int n = 8;
  int m_i = 1000;
  int d = 10;
  int r = 5;
  double xi = 0.8;
  /// Multiplier on the singular values xi^j. <= 0 selects sqrt(n * m_i),
  /// which keeps entries of A at unit scale.
  double scale = 0.0;
  std::uint64_t seed = 1;
};

struct GevpParams {
  PcaParams data;
  /// Exponents e_j of Lambda_jj = 1.1^{e_j}. Empty selects
  /// (1, 0.5, 1, 1.5, ..., d/2 - 0.5).
  std::vector<double> lambda_exponents;
  std::optional<double> gamma;
};

struct LrmcParams {
  int n = 8;
  int m = 100;
  int T = 1000;
  int r = 5;
  /// Observation probability; <= 0 selects r (m + T - r) / (m T).
  double nu = 0.0;
  std::uint64_t seed = 1;
};

double resolved_scale(const PcaParams& p);
std::vector<double> default_lambda_exponents(int d);
double default_nu(int m, int T, int r);

/// Rows of A = U diag(scale xi^j) V^T permuted and split into n equal blocks.
/// The truth is the first r right singular vectors.
PcaProblem gen_pca_data(const PcaParams& p);
GevpProblem gen_gevp_data(const GevpParams& p);
/// A = L R with Gaussian factors, entries observed with probability nu,
/// columns split into n contiguous blocks whose widths differ by at most one.
LrmcProblem gen_lrmc_data(const LrmcParams& p);

/// All eigenpairs of h v = lambda b v, ascending, with V^T b V = I.
struct GeneralizedEig {
  Vector values;
  Matrix vectors;
};
GeneralizedEig generalized_sym_eig(const Matrix& h, const Matrix& b);

/// Splits rows into n contiguous blocks of equal size (rows % n == 0).
std::vector<Matrix> split_rows(const Matrix& a, int n);

}  // namespace decman
