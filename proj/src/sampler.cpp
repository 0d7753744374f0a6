#include "synthfid/sampler.hpp"

#include "synthfid/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace synthfid {

std::string to_string(PriorDrawMode mode) {
  return mode == PriorDrawMode::Matrix ? "matrix" : "cholesky";
}

PriorDrawMode prior_draw_mode_from_string(const std::string& name) {
  if (name == "matrix") return PriorDrawMode::Matrix;
  if (name == "cholesky") return PriorDrawMode::Cholesky;
  throw InvalidDataError("unknown prior-draw mode '" + name + "' (expected matrix|cholesky)");
}

SampleBasis build_basis(const KernelHyperparams& params, const FidelityDataset& data,
                        std::uint64_t seed, PriorDrawMode mode) {
  data.validate();
  params.validate();
  const Eigen::Index nx = data.num_points();
  const Eigen::Index nt = data.num_fidelities();

  double mean_std = 0.0;
  for (Eigen::Index k = 0; k < nt; ++k) {
    const double sd = population_std(data.y.col(k));
    const double scale = std::max(1.0, data.y.col(k).cwiseAbs().maxCoeff());
    if (!(sd > 1e-14 * scale)) {
      throw DegenerateFidelityError("fidelity '" + data.labels[static_cast<std::size_t>(k)] +
                                        "' is constant; its correlation is undefined",
                                    static_cast<int>(k));
    }
    mean_std += sd;
  }
  mean_std /= static_cast<double>(nt);

  SampleBasis basis;
  basis.seed = seed;
  basis.mode = mode;
  Rng rng(seed);
  basis.white_noise = rng.normal_vector(nx);
  const MatrixXd kc = eval_core(params, data.x, data.x);
  VectorXd prior_draw;
  if (mode == PriorDrawMode::Matrix) {
    prior_draw = kc * basis.white_noise;
  } else {
    prior_draw = jittered_cholesky(kc).llt.matrixL() * basis.white_noise;
  }
  const double draw_std = population_std(prior_draw);
  if (!(draw_std > 0.0) || !std::isfinite(draw_std)) {
    throw DegenerateFidelityError("prior draw is constant", static_cast<int>(nt));
  }
  prior_draw *= mean_std / draw_std;

  basis.expanded.resize(nx, nt + 1);
  basis.expanded.leftCols(nt) = data.y;
  basis.expanded.col(nt) = prior_draw;
  basis.means = basis.expanded.colwise().mean().transpose();
  basis.centered = basis.expanded.rowwise() - basis.means.transpose();
  basis.covariance = basis.centered.transpose() * basis.centered / static_cast<double>(nx);
  basis.covariance = 0.5 * (basis.covariance + basis.covariance.transpose());
  basis.stds = basis.covariance.diagonal().cwiseSqrt();
  const VectorXd inv = basis.stds.cwiseInverse();
  basis.correlation = inv.asDiagonal() * basis.covariance * inv.asDiagonal();
  basis.correlation.diagonal().setOnes();
  return basis;
}

SampleBasis build_basis(const MogpModel& model, std::uint64_t seed, PriorDrawMode mode) {
  return build_basis(model.params(), model.data(), seed, mode);
}

HeuristicVariance heuristic_variance(const SampleBasis& basis, const VectorXd& pc) {
  const Eigen::Index n = basis.size();
  if (pc.size() != n) {
    throw InputShapeError("heuristic: correlation vector has length " + std::to_string(pc.size()) +
                          ", expected " + std::to_string(n));
  }
  const MatrixXd& c = basis.correlation;
  VectorXd p = pc;
  VectorXd v = VectorXd::Zero(n);
  HeuristicVariance out;
  out.weights = VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    p -= p.dot(v) * v;
    const VectorXd overlaps = c * p;
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      if (overlaps(i) > overlaps(best)) best = i;
    }
    v = c.row(best).transpose();
    // credited to the selected column so that P_c = e_k yields var(y_k)
    out.weights(best) += overlaps(best);
  }
  out.variance = out.weights.dot(basis.covariance.diagonal());
  return out;
}

CovarianceTargets make_targets(const SampleBasis& basis, const VectorXd& pc,
                               const HeuristicVariance& heuristic) {
  if (pc.size() != basis.size()) throw InputShapeError("targets: correlation vector length mismatch");
  if (!(heuristic.variance > 0.0) || !std::isfinite(heuristic.variance)) {
    throw SamplingError("heuristic sample variance is not positive (" +
                        std::to_string(heuristic.variance) + "); refusing to sample");
  }
  CovarianceTargets t;
  t.pc = pc;
  t.weights = heuristic.weights;
  t.variance = heuristic.variance;
  t.covariances = std::sqrt(heuristic.variance) * basis.stds.cwiseProduct(pc);
  return t;
}

VectorXd solve_coefficients(const SampleBasis& basis, const CovarianceTargets& targets,
                            double max_condition) {
  if (targets.covariances.size() != basis.size()) {
    throw InputShapeError("solve: target covariance length mismatch");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(basis.covariance, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(basis.size() - 1);
  const double condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(condition <= max_condition)) {
    std::ostringstream os;
    os << "basis covariance is ill-conditioned (condition number " << condition
       << "); try a different seed or fewer fidelities";
    throw IllConditionedBasisError(os.str(), condition);
  }
  return basis.covariance.ldlt().solve(targets.covariances);
}

SyntheticSample draw(const MogpModel& model, const SampleBasis& basis, const CorrelationSpec& spec,
                     const DrawOptions& options) {
  const Eigen::Index n = basis.size();
  if (spec.values.size() != n || spec.reference.rows() != n) {
    throw InputShapeError("draw: correlation spec has " + std::to_string(spec.values.size()) +
                          " entries, basis has " + std::to_string(n));
  }
  if ((spec.reference - basis.correlation).cwiseAbs().maxCoeff() > 1e-9) {
    throw SamplingError("draw: correlation spec was validated against a different basis");
  }
  const double residual = spec.span_residual();
  if (std::abs(residual) > options.span_tolerance) {
    throw SamplingError("draw: correlation to the prior draw must sit at an endpoint of its "
                        "bounds (residual " + std::to_string(residual) + ")");
  }

  SyntheticSample out;
  HeuristicVariance heuristic = heuristic_variance(basis, spec.values);
  if (!(heuristic.variance > 0.0)) {
    HeuristicVariance mirrored = heuristic_variance(basis, -spec.values);
    if (mirrored.variance > 0.0) {
      heuristic = std::move(mirrored);
      out.mirrored_heuristic = true;
    }
  }
  const CovarianceTargets targets = make_targets(basis, spec.values, heuristic);
  out.coefficients = solve_coefficients(basis, targets, options.max_condition);
  out.values = basis.expanded * out.coefficients;
  out.requested = spec.values;
  out.achieved.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.achieved(i) = pearson(out.values, basis.expanded.col(i));
  const Eigen::Index nt = n - 1;
  out.implied_task_cross = model.task().covariance() * out.coefficients.head(nt);
  out.heuristic_weights = heuristic.weights;
  out.heuristic_variance = heuristic.variance;
  out.realized_variance = population_variance(out.values);
  out.seed = basis.seed;
  out.basis = basis;
  return out;
}

SyntheticSample draw(const MogpModel& model, const CorrelationSpec& spec, std::uint64_t seed,
                     const DrawOptions& options) {
  return draw(model, build_basis(model, seed, options.mode), spec, options);
}

}  // namespace synthfid
