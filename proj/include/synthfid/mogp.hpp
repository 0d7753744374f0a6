#pragma once

#include "synthfid/dataset.hpp"
#include "synthfid/kernel.hpp"
#include "synthfid/linalg.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace synthfid {

/// Log marginal likelihood of the stacked targets under Σ_T ⊗ K_c + noise,
/// factorized by a jittered dense Cholesky.
double log_marginal_likelihood(const FidelityDataset& data, const KernelHyperparams& params,
                               const TaskMatrix& task, const JitterPolicy& jitter = {});

enum class NoiseMode { Shared, PerFidelity, Fixed };

std::string to_string(NoiseMode mode);

struct FitConfig {
  KernelKind kernel = KernelKind::SpectralMixture;
  int mixtures = 4;
  int restarts = 8;
  int max_iterations = 200;
  double gradient_tolerance = 1e-5;
  std::uint64_t seed = 0;
  NoiseMode noise = NoiseMode::Shared;
  double fixed_noise = 0.0;  ///< used when noise == Fixed
  /// Learned noise variances stay above this fraction of the pooled target
  /// variance, keeping the training covariance well above jitter level.
  double noise_floor_relative = 1e-6;
  /// Worker threads for restarts; 0 = hardware concurrency. Results do not
  /// depend on this value.
  int threads = 0;
  JitterPolicy jitter;
};

struct FitDiagnostics {
  double log_marginal_likelihood = 0.0;  ///< objective value of the best restart
  int iterations = 0;                    ///< iterations of the best restart
  int restarts_used = 0;
  int best_restart = -1;
  std::vector<double> restart_initial_lml;  ///< NaN when the start was infeasible
  std::vector<double> restart_final_lml;
  std::vector<std::string> restart_failures;  ///< empty string when the restart succeeded
};

/// Fitted multi-output GP. Immutable once built.
class MogpModel {
public:
  /// Builds a model from explicit hyperparameters and caches the factor of
  /// the training covariance.
  static MogpModel build(std::shared_ptr<const FidelityDataset> data, KernelHyperparams params,
                         TaskMatrix task, FitDiagnostics diagnostics = {},
                         const JitterPolicy& jitter = {});

  const FidelityDataset& data() const { return *data_; }
  std::shared_ptr<const FidelityDataset> data_ptr() const { return data_; }
  const KernelHyperparams& params() const { return params_; }
  const TaskMatrix& task() const { return task_; }
  const FitDiagnostics& diagnostics() const { return diagnostics_; }
  /// Cholesky factor of Σ_T ⊗ K_c + noise (+ jitter).
  const JitteredCholesky& factor() const { return *factor_; }
  /// K^{-1} y, stacked fidelity-major.
  const VectorXd& alpha() const { return alpha_; }
  MatrixXd core_matrix() const;

private:
  MogpModel() = default;
  std::shared_ptr<const FidelityDataset> data_;
  KernelHyperparams params_;
  TaskMatrix task_;
  FitDiagnostics diagnostics_;
  std::shared_ptr<const JitteredCholesky> factor_;
  VectorXd alpha_;
};

/// Maps between (kernel, task, noise) and the unconstrained vector searched
/// by the optimizer: log kernel parameters, task factor entries (diagonal
/// through softplus), then log(noise variance - noise_floor).
class FitParameterization {
public:
  FitParameterization(KernelHyperparams kernel_template, Eigen::Index num_fidelities,
                      NoiseMode noise, double fixed_noise = 0.0, double noise_floor = 0.0);

  Eigen::Index size() const;
  Eigen::Index num_kernel_params() const { return num_kernel_; }
  Eigen::Index num_task_params() const { return num_task_; }
  Eigen::Index num_noise_params() const;

  VectorXd pack(const KernelHyperparams& params, const TaskMatrix& task) const;
  KernelHyperparams kernel(const VectorXd& theta) const;
  TaskMatrix task(const VectorXd& theta) const;

  struct Evaluation {
    double lml = 0.0;
    VectorXd gradient;  ///< d lml / d theta
  };
  /// LML and its analytic gradient. Uses the exact Kronecker eigen route when
  /// every noise variance is positive, otherwise the dense jittered Cholesky
  /// (or forced with `dense = true`).
  Evaluation evaluate(const FidelityDataset& data, const VectorXd& theta, bool dense = false,
                      const JitterPolicy& jitter = {}) const;

private:
  KernelHyperparams template_;
  Eigen::Index num_fidelities_;
  NoiseMode noise_;
  double fixed_noise_;
  double noise_floor_;
  Eigen::Index num_kernel_;
  Eigen::Index num_task_;
};

/// Multi-restart quasi-Newton maximization of the LML. Deterministic in
/// (data, config); throws FitError when every restart fails.
MogpModel fit(std::shared_ptr<const FidelityDataset> data, const FitConfig& config);

struct FidelityPosterior {
  VectorXd mean;
  MatrixXd covariance;
};

/// Noise-free latent posterior at `xstar`, one entry per fidelity.
std::vector<FidelityPosterior> posterior(const MogpModel& model, const MatrixXd& xstar);

/// Posterior over an extra task with no observations, evaluated at the
/// training points. Noise-free models use the compact task-space
/// expressions; noisy ones condition on the data through the cached factor.
struct SyntheticTaskPosterior {
  VectorXd contribution;  ///< Σ_T^{-1} Σ_T*
  double task_variance = 0.0;
  VectorXd mean;
  MatrixXd covariance;
};

SyntheticTaskPosterior synthetic_task_posterior(const MogpModel& model, const VectorXd& task_cross,
                                                double task_var);

}  // namespace synthfid
