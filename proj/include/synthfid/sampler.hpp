#pragma once

#include "synthfid/corrbounds.hpp"
#include "synthfid/dataset.hpp"
#include "synthfid/kernel.hpp"
#include "synthfid/linalg.hpp"
#include "synthfid/mogp.hpp"

#include <cstdint>
#include <string>

namespace synthfid {

/// How the prior draw y_n is produced from white noise r.
///   Matrix:   y_n = K_c r (the reference procedure)
///   Cholesky: y_n = L r with K_c = L L^T (an exact draw from the prior)
enum class PriorDrawMode { Matrix, Cholesky };

std::string to_string(PriorDrawMode mode);
PriorDrawMode prior_draw_mode_from_string(const std::string& name);

/// Existing fidelity columns plus one prior draw, with their population
/// statistics. Independent of the task matrix.
struct SampleBasis {
  MatrixXd expanded;     ///< Y', n_x by (n_t + 1)
  MatrixXd centered;     ///< Y' with column means removed
  VectorXd means;        ///< column means of Y'
  MatrixXd covariance;   ///< centered^T centered / n_x
  VectorXd stds;         ///< sqrt(diag(covariance))
  MatrixXd correlation;  ///< C
  VectorXd white_noise;  ///< r
  std::uint64_t seed = 0;
  PriorDrawMode mode = PriorDrawMode::Matrix;

  Eigen::Index size() const { return expanded.cols(); }
};

SampleBasis build_basis(const KernelHyperparams& params, const FidelityDataset& data,
                        std::uint64_t seed, PriorDrawMode mode = PriorDrawMode::Matrix);
SampleBasis build_basis(const MogpModel& model, std::uint64_t seed,
                        PriorDrawMode mode = PriorDrawMode::Matrix);

struct HeuristicVariance {
  VectorXd weights;  ///< accumulated overlap per basis column
  double variance = 0.0;
};

/// Overlap-weighted mean of the basis variances: repeatedly pick the
/// correlation row with the largest overlap with P_c (lowest index on ties),
/// add the overlap to that column's weight, and project the previously
/// selected row out of P_c.
HeuristicVariance heuristic_variance(const SampleBasis& basis, const VectorXd& pc);

struct CovarianceTargets {
  VectorXd pc;
  VectorXd weights;
  double variance = 0.0;  ///< heuristic sample variance sigma_h
  VectorXd covariances;   ///< sigma_s,i = sqrt(sigma_h) std_i P_c,i
};

/// Throws SamplingError when `variance` is not strictly positive.
CovarianceTargets make_targets(const SampleBasis& basis, const VectorXd& pc,
                               const HeuristicVariance& heuristic);

/// Solves (Y~'^T Y~' / n) c = sigma_s with a symmetric factorization.
/// Throws IllConditionedBasisError above `max_condition`.
VectorXd solve_coefficients(const SampleBasis& basis, const CovarianceTargets& targets,
                            double max_condition = 1e12);

struct DrawOptions {
  PriorDrawMode mode = PriorDrawMode::Matrix;
  double max_condition = 1e12;
  /// Largest |1 - P_c^T C^{-1} P_c| accepted as realizable.
  double span_tolerance = 1e-8;
};

struct SyntheticSample {
  VectorXd values;              ///< s
  VectorXd coefficients;        ///< c
  VectorXd requested;           ///< P_c
  VectorXd achieved;            ///< Pearson correlation of s with each basis column
  VectorXd implied_task_cross;  ///< Σ_T c[0..n_t)
  VectorXd heuristic_weights;
  double heuristic_variance = 0.0;
  /// True when sigma_h came from -P_c because the direct value was not positive.
  bool mirrored_heuristic = false;
  double realized_variance = 0.0;
  std::uint64_t seed = 0;
  SampleBasis basis;
};

SyntheticSample draw(const MogpModel& model, const SampleBasis& basis, const CorrelationSpec& spec,
                     const DrawOptions& options = {});
SyntheticSample draw(const MogpModel& model, const CorrelationSpec& spec, std::uint64_t seed,
                     const DrawOptions& options = {});

}  // namespace synthfid
