#pragma once

#include "synthfid/linalg.hpp"

#include <string>
#include <vector>

namespace synthfid {

enum class KernelKind { Rbf, SpectralMixture };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

/// One component of a spectral mixture: a Gaussian in frequency space with
/// per-dimension mean (cycles per domain unit) and variance.
struct SpectralComponent {
  double weight = 1.0;
  VectorXd mean;
  VectorXd variance;
};

/// Hyperparameters of the intra-fidelity kernel plus observation noise.
///
/// `noise_variance` holds either one shared value or one value per fidelity.
struct KernelHyperparams {
  KernelKind kind = KernelKind::Rbf;

  // RBF
  VectorXd lengthscales;
  double signal_variance = 1.0;

  // spectral mixture
  std::vector<SpectralComponent> components;

  std::vector<double> noise_variance{0.0};

  static KernelHyperparams rbf(VectorXd lengthscales, double signal_variance,
                               double noise_variance = 0.0);
  static KernelHyperparams spectral_mixture(std::vector<SpectralComponent> components,
                                            double noise_variance = 0.0);

  Eigen::Index input_dim() const;
  double noise_for(Eigen::Index fidelity) const;
  /// Throws InputShapeError / InvalidDataError when an invariant is violated.
  void validate() const;

  /// Number of kernel (non-noise) parameters in log space.
  Eigen::Index num_log_params() const;
  /// Kernel parameters as logarithms, in a fixed order:
  /// RBF: log lengthscale_d..., log signal variance.
  /// SM: per component: log weight, log mean_d..., log variance_d...
  VectorXd log_params() const;
  /// Copy of *this with kernel parameters replaced from log space.
  KernelHyperparams with_log_params(const VectorXd& log_params) const;
};

/// Inter-fidelity covariance Σ_T, stored through its lower Cholesky-style
/// factor so that Σ_T = L L^T is positive semi-definite by construction.
class TaskMatrix {
public:
  TaskMatrix() = default;
  static TaskMatrix from_factor(MatrixXd lower);
  /// Factorizes a symmetric PSD matrix (zero pivots allowed).
  static TaskMatrix from_covariance(const MatrixXd& sigma);
  static TaskMatrix identity(Eigen::Index n);

  Eigen::Index size() const { return factor_.rows(); }
  const MatrixXd& factor() const { return factor_; }
  MatrixXd covariance() const { return factor_ * factor_.transpose(); }

private:
  explicit TaskMatrix(MatrixXd lower);
  MatrixXd factor_;
};

/// Intra-fidelity kernel matrix between the rows of `a` and the rows of `b`.
/// Noise is not included.
MatrixXd eval_core(const KernelHyperparams& params, const MatrixXd& a, const MatrixXd& b);

/// Full coregionalization covariance Σ_T ⊗ K_c with per-fidelity noise on the
/// diagonal. Row index is fidelity * n_x + point.
MatrixXd eval_coreg(const KernelHyperparams& params, const TaskMatrix& task, const MatrixXd& x);

/// Returns sum_ij weights(i,j) * dK_c(i,j)/d(log param p) for every kernel
/// parameter p in `log_params()` order. `weights` is n_x by n_x.
VectorXd core_gradient_contract(const KernelHyperparams& params, const MatrixXd& x,
                                const MatrixXd& weights);

}  // namespace synthfid
