#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace synthfid {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Lower Cholesky factor of a symmetric matrix together with the diagonal
/// jitter that was needed to obtain it.
struct JitteredCholesky {
  Eigen::LLT<MatrixXd> llt;
  double jitter = 0.0;

  VectorXd solve(const VectorXd& b) const { return llt.solve(b); }
  MatrixXd solve(const MatrixXd& b) const { return llt.solve(b); }
  double log_determinant() const;
};

struct JitterPolicy {
  double initial_relative = 1e-10;
  double max_relative = 1e-4;
  double growth = 10.0;
};

/// Factorizes `a`, adding relative jitter (times the mean diagonal) until the
/// factorization succeeds. Throws ConditioningError once `max_relative` fails.
JitteredCholesky jittered_cholesky(const MatrixXd& a, const JitterPolicy& policy = {});

struct SymmetricEigen {
  VectorXd values;   ///< ascending
  MatrixXd vectors;  ///< columns are eigenvectors
};

/// Eigendecomposition of a symmetric matrix.
SymmetricEigen symmetric_eigen(const MatrixXd& a);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const MatrixXd& a);

/// max |a - a^T| / max |a|, zero for an all-zero matrix.
double relative_asymmetry(const MatrixXd& a);

/// Population (1/n) statistics.
double mean(const VectorXd& v);
double population_variance(const VectorXd& v);
double population_std(const VectorXd& v);
double pearson(const VectorXd& a, const VectorXd& b);

/// Deterministic random stream. Uniform and normal variates are derived from
/// the raw mt19937_64 output by fixed transforms so that sequences are
/// identical on every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  VectorXd normal_vector(Eigen::Index n);
  std::uint64_t next() { return engine_(); }

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent stream seed from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace synthfid
