#include "synthfid/linalg.hpp"

#include "synthfid/errors.hpp"

#include <cmath>
#include <numbers>

namespace synthfid {

double JitteredCholesky::log_determinant() const {
  const MatrixXd& l = llt.matrixLLT();
  return 2.0 * l.diagonal().array().log().sum();
}

JitteredCholesky jittered_cholesky(const MatrixXd& a, const JitterPolicy& policy) {
  if (a.rows() != a.cols()) {
    throw InputShapeError("cholesky: matrix is not square");
  }
  double scale = a.rows() > 0 ? a.diagonal().mean() : 1.0;
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    scale = 1.0;
  }
  double relative = policy.initial_relative;
  JitteredCholesky out;
  while (true) {
    double jitter = relative * scale;
    MatrixXd m = a;
    m.diagonal().array() += jitter;
    out.llt.compute(m);
    if (out.llt.info() == Eigen::Success &&
        out.llt.matrixLLT().diagonal().allFinite()) {
      out.jitter = jitter;
      return out;
    }
    if (relative >= policy.max_relative * (1.0 - 1e-12)) {
      throw ConditioningError("covariance matrix is not positive definite", jitter);
    }
    // a zero starting jitter cannot grow geometrically; go straight to the cap
    relative = relative > 0.0 ? std::min(relative * policy.growth, policy.max_relative)
                              : policy.max_relative;
  }
}

SymmetricEigen symmetric_eigen(const MatrixXd& a) {
  if (a.rows() != a.cols()) throw InputShapeError("eigen: matrix is not square");
  SymmetricEigen out;
  if (a.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  if (es.info() != Eigen::Success) {
    throw ConditioningError("symmetric eigendecomposition did not converge", 0.0);
  }
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  return out;
}

double min_eigenvalue(const MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double relative_asymmetry(const MatrixXd& a) {
  double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) {
    return 0.0;
  }
  return (a - a.transpose()).cwiseAbs().maxCoeff() / scale;
}

double mean(const VectorXd& v) { return v.mean(); }

double population_variance(const VectorXd& v) {
  double m = v.mean();
  return (v.array() - m).square().mean();
}

double population_std(const VectorXd& v) { return std::sqrt(population_variance(v)); }

double pearson(const VectorXd& a, const VectorXd& b) {
  VectorXd ca = a.array() - a.mean();
  VectorXd cb = b.array() - b.mean();
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

VectorXd Rng::normal_vector(Eigen::Index n) {
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v(i) = normal();
  }
  return v;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace synthfid
