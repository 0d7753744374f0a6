#include "synthfid/mogp.hpp"

#include "synthfid/errors.hpp"
#include "synthfid/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace synthfid {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
double softplus_inverse(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

VectorXd stacked_targets(const FidelityDataset& data) {
  return Eigen::Map<const VectorXd>(data.y.data(), data.y.size());
}

void check_compatible(const FidelityDataset& data, const KernelHyperparams& params,
                      const TaskMatrix& task) {
  data.validate();
  params.validate();
  if (task.size() != data.num_fidelities()) {
    throw InputShapeError("task matrix size " + std::to_string(task.size()) +
                          " does not match " + std::to_string(data.num_fidelities()) +
                          " fidelities");
  }
  if (params.input_dim() != data.num_dims()) {
    throw InputShapeError("kernel dimension does not match dataset dimension");
  }
  if (params.noise_variance.size() != 1 &&
      static_cast<Eigen::Index>(params.noise_variance.size()) != data.num_fidelities()) {
    throw InputShapeError("noise list length must be 1 or n_t");
  }
}

/// Sufficient statistics for the LML gradient with W = alpha alpha^T - K^{-1}:
///   core_weights = sum_kl t_kl W_(k,l)       (n_x by n_x)
///   task_weights(k,l) = <K_c, W_(k,l)>         (n_t by n_t)
///   noise_traces(k) = trace W_(k,k)
struct LmlParts {
  double lml = 0.0;
  MatrixXd core_weights;
  MatrixXd task_weights;
  VectorXd noise_traces;
};

/// The jitter is a fixed fraction `relative` of the mean diagonal of K, so it
/// moves with the parameters. Its contribution replaces W by W + c I with
/// c = relative * tr(W) / N.
void add_jitter_dependence(LmlParts& parts, double relative, const MatrixXd& sigma,
                           const MatrixXd& kc) {
  const Eigen::Index nx = kc.rows();
  const Eigen::Index nt = sigma.rows();
  const double c = relative * parts.noise_traces.sum() / static_cast<double>(nx * nt);
  parts.core_weights.diagonal().array() += c * sigma.trace();
  parts.task_weights.diagonal().array() += c * kc.trace();
  parts.noise_traces.array() += c * static_cast<double>(nx);
}

LmlParts dense_parts(const FidelityDataset& data, const KernelHyperparams& params,
                     const TaskMatrix& task, const JitterPolicy& jitter, bool with_gradient) {
  const Eigen::Index nx = data.num_points();
  const Eigen::Index nt = data.num_fidelities();
  const MatrixXd kc = eval_core(params, data.x, data.x);
  const MatrixXd sigma = task.covariance();
  MatrixXd k(nx * nt, nx * nt);
  for (Eigen::Index l = 0; l < nt; ++l) {
    for (Eigen::Index r = 0; r < nt; ++r) k.block(r * nx, l * nx, nx, nx) = sigma(r, l) * kc;
    k.block(l * nx, l * nx, nx, nx).diagonal().array() += params.noise_for(l);
  }
  const JitteredCholesky chol = jittered_cholesky(k, jitter);
  const VectorXd y = stacked_targets(data);
  const VectorXd alpha = chol.solve(y);

  LmlParts parts;
  parts.lml = -0.5 * y.dot(alpha) - 0.5 * chol.log_determinant() -
              0.5 * static_cast<double>(nx * nt) * kLog2Pi;
  if (!with_gradient) return parts;

  MatrixXd w = alpha * alpha.transpose();
  w -= chol.solve(MatrixXd(MatrixXd::Identity(nx * nt, nx * nt)));
  parts.core_weights = MatrixXd::Zero(nx, nx);
  parts.task_weights.resize(nt, nt);
  parts.noise_traces.resize(nt);
  for (Eigen::Index l = 0; l < nt; ++l) {
    for (Eigen::Index r = 0; r < nt; ++r) {
      auto block = w.block(r * nx, l * nx, nx, nx);
      parts.core_weights += sigma(r, l) * block;
      parts.task_weights(r, l) = (kc.array() * block.array()).sum();
    }
    parts.noise_traces(l) = w.block(l * nx, l * nx, nx, nx).trace();
  }
  const double scale = k.diagonal().mean();
  if (scale > 0.0) add_jitter_dependence(parts, chol.jitter / scale, sigma, kc);
  return parts;
}

/// Exact route for strictly positive noise: whitening by the noise turns the
/// covariance into (Σ~ ⊗ K_c) + I, which is diagonalized by the eigenvectors
/// of Σ~ and K_c.
LmlParts spectral_parts(const FidelityDataset& data, const KernelHyperparams& params,
                        const TaskMatrix& task, const JitterPolicy& jitter) {
  const Eigen::Index nx = data.num_points();
  const Eigen::Index nt = data.num_fidelities();
  const MatrixXd kc = eval_core(params, data.x, data.x);
  const MatrixXd sigma = task.covariance();

  // same first jitter as the dense factorization, folded into the noise
  VectorXd noise(nt);
  for (Eigen::Index k = 0; k < nt; ++k) noise(k) = params.noise_for(k);
  const double scale = (sigma.diagonal().sum() * kc.diagonal().mean() + noise.sum()) /
                       static_cast<double>(nt);
  noise.array() += jitter.initial_relative * scale;
  const VectorXd inv_sqrt_noise = noise.array().rsqrt();

  const SymmetricEigen core_eig = symmetric_eigen(kc);
  const MatrixXd& q = core_eig.vectors;
  const VectorXd lambda = core_eig.values.cwiseMax(0.0);

  const MatrixXd whitened = inv_sqrt_noise.asDiagonal() * sigma * inv_sqrt_noise.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixXd> task_eig(whitened);
  const MatrixXd& v = task_eig.eigenvectors();
  const VectorXd s = task_eig.eigenvalues().cwiseMax(0.0);

  // E(b, a) = s_a lambda_b + 1
  const MatrixXd e = (lambda * s.transpose()).array() + 1.0;
  const MatrixXd z = q.transpose() * (data.y * inv_sqrt_noise.asDiagonal()) * v;
  const MatrixXd z_scaled = z.array() / e.array();

  LmlParts parts;
  const double quad = (z.array() * z_scaled.array()).sum();
  const double logdet = static_cast<double>(nx) * noise.array().log().sum() + e.array().log().sum();
  parts.lml = -0.5 * quad - 0.5 * logdet - 0.5 * static_cast<double>(nx * nt) * kLog2Pi;

  const MatrixXd a = q * z_scaled * v.transpose() * inv_sqrt_noise.asDiagonal();
  const MatrixXd inv_e = e.array().inverse();
  const VectorXd m = inv_e * s;                                             // sum_a s_a / E(b,a)
  const VectorXd p = inv_e.transpose() * lambda;                            // sum_b lambda_b / E(b,a)
  const VectorXd u = inv_e.colwise().sum().transpose();                     // sum_b 1 / E(b,a)

  parts.core_weights = a * sigma * a.transpose() - q * m.asDiagonal() * q.transpose();
  const MatrixXd vd = inv_sqrt_noise.asDiagonal() * v;
  parts.task_weights = a.transpose() * kc * a - vd * p.asDiagonal() * vd.transpose();
  parts.noise_traces.resize(nt);
  for (Eigen::Index k = 0; k < nt; ++k) {
    double inv_trace = 0.0;
    for (Eigen::Index j = 0; j < nt; ++j) inv_trace += v(k, j) * v(k, j) * u(j);
    parts.noise_traces(k) = a.col(k).squaredNorm() - inv_trace / noise(k);
  }
  add_jitter_dependence(parts, jitter.initial_relative, sigma, kc);
  return parts;
}

}  // namespace

std::string to_string(NoiseMode mode) {
  switch (mode) {
    case NoiseMode::Shared:
      return "shared";
    case NoiseMode::PerFidelity:
      return "per-fidelity";
    case NoiseMode::Fixed:
      return "fixed";
  }
  return "unknown";
}

double log_marginal_likelihood(const FidelityDataset& data, const KernelHyperparams& params,
                               const TaskMatrix& task, const JitterPolicy& jitter) {
  check_compatible(data, params, task);
  return dense_parts(data, params, task, jitter, false).lml;
}

// ---------------------------------------------------------------------------
// MogpModel

MogpModel MogpModel::build(std::shared_ptr<const FidelityDataset> data, KernelHyperparams params,
                           TaskMatrix task, FitDiagnostics diagnostics,
                           const JitterPolicy& jitter) {
  if (!data) throw InvalidDataError("model: dataset is null");
  check_compatible(*data, params, task);
  MogpModel model;
  model.data_ = std::move(data);
  model.params_ = std::move(params);
  model.task_ = std::move(task);
  model.diagnostics_ = std::move(diagnostics);
  const MatrixXd k = eval_coreg(model.params_, model.task_, model.data_->x);
  model.factor_ = std::make_shared<const JitteredCholesky>(jittered_cholesky(k, jitter));
  model.alpha_ = model.factor_->solve(VectorXd(stacked_targets(*model.data_)));
  return model;
}

MatrixXd MogpModel::core_matrix() const { return eval_core(params_, data_->x, data_->x); }

// ---------------------------------------------------------------------------
// FitParameterization

FitParameterization::FitParameterization(KernelHyperparams kernel_template,
                                         Eigen::Index num_fidelities, NoiseMode noise,
                                         double fixed_noise, double noise_floor)
    : template_(std::move(kernel_template)),
      num_fidelities_(num_fidelities),
      noise_(noise),
      fixed_noise_(fixed_noise),
      noise_floor_(noise_floor),
      num_kernel_(template_.num_log_params()),
      num_task_(num_fidelities * (num_fidelities + 1) / 2) {
  if (num_fidelities < 1) throw InputShapeError("parameterization: need at least one fidelity");
  if (noise == NoiseMode::Fixed && !(fixed_noise >= 0.0)) {
    throw InvalidDataError("parameterization: fixed noise must be non-negative");
  }
  if (!(noise_floor >= 0.0)) throw InvalidDataError("parameterization: noise floor must be non-negative");
}

Eigen::Index FitParameterization::num_noise_params() const {
  switch (noise_) {
    case NoiseMode::Shared:
      return 1;
    case NoiseMode::PerFidelity:
      return num_fidelities_;
    case NoiseMode::Fixed:
      return 0;
  }
  return 0;
}

Eigen::Index FitParameterization::size() const {
  return num_kernel_ + num_task_ + num_noise_params();
}

VectorXd FitParameterization::pack(const KernelHyperparams& params, const TaskMatrix& task) const {
  if (task.size() != num_fidelities_) throw InputShapeError("parameterization: task size mismatch");
  VectorXd theta(size());
  theta.head(num_kernel_) = params.log_params();
  Eigen::Index idx = num_kernel_;
  const MatrixXd& l = task.factor();
  for (Eigen::Index r = 0; r < num_fidelities_; ++r) {
    for (Eigen::Index c = 0; c <= r; ++c) {
      theta(idx++) = r == c ? softplus_inverse(std::max(l(r, c), 1e-8)) : l(r, c);
    }
  }
  auto log_excess = [&](double noise) {
    return std::log(std::max(noise - noise_floor_, std::max(1e-6 * noise_floor_, 1e-300)));
  };
  if (noise_ == NoiseMode::Shared) {
    theta(idx++) = log_excess(params.noise_for(0));
  } else if (noise_ == NoiseMode::PerFidelity) {
    for (Eigen::Index k = 0; k < num_fidelities_; ++k) theta(idx++) = log_excess(params.noise_for(k));
  }
  return theta;
}

KernelHyperparams FitParameterization::kernel(const VectorXd& theta) const {
  if (theta.size() != size()) throw InputShapeError("parameterization: wrong vector length");
  KernelHyperparams p = template_.with_log_params(theta.head(num_kernel_));
  const Eigen::Index base = num_kernel_ + num_task_;
  switch (noise_) {
    case NoiseMode::Shared:
      p.noise_variance = {noise_floor_ + std::exp(theta(base))};
      break;
    case NoiseMode::PerFidelity:
      p.noise_variance.resize(static_cast<std::size_t>(num_fidelities_));
      for (Eigen::Index k = 0; k < num_fidelities_; ++k) {
        p.noise_variance[static_cast<std::size_t>(k)] = noise_floor_ + std::exp(theta(base + k));
      }
      break;
    case NoiseMode::Fixed:
      p.noise_variance = {fixed_noise_};
      break;
  }
  return p;
}

TaskMatrix FitParameterization::task(const VectorXd& theta) const {
  MatrixXd l = MatrixXd::Zero(num_fidelities_, num_fidelities_);
  Eigen::Index idx = num_kernel_;
  for (Eigen::Index r = 0; r < num_fidelities_; ++r) {
    for (Eigen::Index c = 0; c <= r; ++c) {
      l(r, c) = r == c ? softplus(theta(idx)) : theta(idx);
      ++idx;
    }
  }
  return TaskMatrix::from_factor(std::move(l));
}

FitParameterization::Evaluation FitParameterization::evaluate(const FidelityDataset& data,
                                                              const VectorXd& theta, bool dense,
                                                              const JitterPolicy& jitter) const {
  const KernelHyperparams params = kernel(theta);
  const TaskMatrix task_matrix = task(theta);
  check_compatible(data, params, task_matrix);

  bool positive_noise = true;
  for (double n : params.noise_variance) positive_noise = positive_noise && n > 0.0;
  const LmlParts parts = (dense || !positive_noise)
                             ? dense_parts(data, params, task_matrix, jitter, true)
                             : spectral_parts(data, params, task_matrix, jitter);

  Evaluation out;
  out.lml = parts.lml;
  out.gradient.resize(size());
  out.gradient.head(num_kernel_) = 0.5 * core_gradient_contract(params, data.x, parts.core_weights);

  const MatrixXd hl = parts.task_weights * task_matrix.factor();
  Eigen::Index idx = num_kernel_;
  for (Eigen::Index r = 0; r < num_fidelities_; ++r) {
    for (Eigen::Index c = 0; c <= r; ++c) {
      out.gradient(idx) = r == c ? hl(r, c) * sigmoid(theta(idx)) : hl(r, c);
      ++idx;
    }
  }
  if (noise_ == NoiseMode::Shared) {
    out.gradient(idx) = 0.5 * std::exp(theta(idx)) * parts.noise_traces.sum();
  } else if (noise_ == NoiseMode::PerFidelity) {
    for (Eigen::Index k = 0; k < num_fidelities_; ++k) {
      out.gradient(idx + k) = 0.5 * std::exp(theta(idx + k)) * parts.noise_traces(k);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// fit

namespace {

struct RestartOutcome {
  double initial_lml = std::numeric_limits<double>::quiet_NaN();
  double final_lml = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  VectorXd theta;
  std::string failure;
};

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

KernelHyperparams initial_kernel(const FidelityDataset& data, const FitConfig& config, Rng& rng) {
  const Eigen::Index dims = data.num_dims();
  VectorXd span = data.x.colwise().maxCoeff() - data.x.colwise().minCoeff();
  for (Eigen::Index d = 0; d < dims; ++d) {
    if (!(span(d) > 0.0)) span(d) = 1.0;
  }
  if (config.kernel == KernelKind::Rbf) {
    VectorXd ls(dims);
    for (Eigen::Index d = 0; d < dims; ++d) ls(d) = span(d) * log_uniform(rng, 0.01, 2.0);
    return KernelHyperparams::rbf(ls, 1.0);
  }
  if (config.mixtures < 1) throw InvalidDataError("fit: spectral mixture needs at least one mixture");
  const Eigen::Index n = data.num_points();
  std::vector<SpectralComponent> comps;
  for (int q = 0; q < config.mixtures; ++q) {
    SpectralComponent c;
    c.weight = 1.0 / config.mixtures;
    c.mean.resize(dims);
    c.variance.resize(dims);
    for (Eigen::Index d = 0; d < dims; ++d) {
      // frequency from the reciprocal of a random nonzero pairwise distance
      double dist = 0.0;
      for (int attempt = 0; attempt < 64 && dist <= 0.0; ++attempt) {
        auto i = static_cast<Eigen::Index>(rng.next() % static_cast<std::uint64_t>(n));
        auto j = static_cast<Eigen::Index>(rng.next() % static_cast<std::uint64_t>(n));
        dist = std::abs(data.x(i, d) - data.x(j, d));
      }
      if (dist <= 0.0) dist = span(d);
      c.mean(d) = std::max(rng.uniform(0.0, 0.5) / dist, 1e-6);
      double ls = span(d) * log_uniform(rng, 0.01, 2.0);
      c.variance(d) = 1.0 / (4.0 * std::numbers::pi * std::numbers::pi * ls * ls);
    }
    comps.push_back(std::move(c));
  }
  return KernelHyperparams::spectral_mixture(std::move(comps));
}

double pooled_variance(const FidelityDataset& data) {
  const MatrixXd centered = data.y.rowwise() - data.y.colwise().mean();
  return centered.array().square().mean();
}

TaskMatrix initial_task(const FidelityDataset& data) {
  const MatrixXd centered = data.y.rowwise() - data.y.colwise().mean();
  MatrixXd cov = centered.transpose() * centered / static_cast<double>(data.num_points());
  double bump = 1e-3 * cov.diagonal().maxCoeff();
  if (!(bump > 0.0)) bump = 1e-3;
  cov.diagonal().array() += bump;
  return TaskMatrix::from_covariance(cov);
}

RestartOutcome run_restart(const FidelityDataset& data, const FitConfig& config, int index) {
  RestartOutcome out;
  try {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(index)));
    KernelHyperparams init = initial_kernel(data, config, rng);
    const TaskMatrix task0 = initial_task(data);
    const double var = pooled_variance(data);
    if (config.noise == NoiseMode::Fixed) {
      init.noise_variance = {config.fixed_noise};
    } else {
      init.noise_variance = {std::max(1e-2 * var, 1e-10)};
    }
    FitParameterization param(init, data.num_fidelities(), config.noise, config.fixed_noise,
                              config.noise_floor_relative * var);
    const VectorXd theta0 = param.pack(init, task0);

    Objective objective = [&](const VectorXd& theta, VectorXd& grad) {
      auto eval = param.evaluate(data, theta, false, config.jitter);
      grad = -eval.gradient;
      return -eval.lml;
    };
    VectorXd scratch;
    try {
      out.initial_lml = -objective(theta0, scratch);
    } catch (const std::exception& e) {
      out.failure = std::string("initial point: ") + e.what();
      return out;
    }
    LbfgsSettings settings;
    settings.max_iterations = config.max_iterations;
    settings.gradient_tolerance = config.gradient_tolerance;
    LbfgsResult res = minimize_lbfgs(objective, theta0, settings);
    if (!std::isfinite(res.value)) {
      out.failure = "objective not finite";
      return out;
    }
    out.final_lml = -res.value;
    out.iterations = res.iterations;
    out.theta = res.x;
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  return out;
}

}  // namespace

MogpModel fit(std::shared_ptr<const FidelityDataset> data, const FitConfig& config) {
  if (!data) throw InvalidDataError("fit: dataset is null");
  data->validate();
  if (config.restarts < 1) throw InvalidDataError("fit: restarts must be >= 1");

  std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(config.restarts));
  unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(config.restarts));
  std::atomic<int> next{0};
  auto work = [&]() {
    for (int i = next++; i < config.restarts; i = next++) {
      outcomes[static_cast<std::size_t>(i)] = run_restart(*data, config, i);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  FitDiagnostics diag;
  diag.restarts_used = config.restarts;
  std::vector<std::string> causes;
  for (int i = 0; i < config.restarts; ++i) {
    const auto& o = outcomes[static_cast<std::size_t>(i)];
    diag.restart_initial_lml.push_back(o.initial_lml);
    diag.restart_final_lml.push_back(o.final_lml);
    diag.restart_failures.push_back(o.failure);
    if (!o.failure.empty()) {
      causes.push_back("restart " + std::to_string(i) + ": " + o.failure);
      continue;
    }
    if (diag.best_restart < 0 ||
        o.final_lml > outcomes[static_cast<std::size_t>(diag.best_restart)].final_lml) {
      diag.best_restart = i;
    }
  }
  if (diag.best_restart < 0) throw FitError("fit: every restart failed", causes);

  const auto& best = outcomes[static_cast<std::size_t>(diag.best_restart)];
  diag.log_marginal_likelihood = best.final_lml;
  diag.iterations = best.iterations;

  // rebuild the template the winning restart used (only its shape matters)
  Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(diag.best_restart)));
  KernelHyperparams shape = initial_kernel(*data, config, rng);
  FitParameterization param(shape, data->num_fidelities(), config.noise, config.fixed_noise,
                            config.noise_floor_relative * pooled_variance(*data));
  return MogpModel::build(data, param.kernel(best.theta), param.task(best.theta), std::move(diag),
                          config.jitter);
}

// ---------------------------------------------------------------------------
// posteriors

std::vector<FidelityPosterior> posterior(const MogpModel& model, const MatrixXd& xstar) {
  const auto& data = model.data();
  if (xstar.cols() != data.num_dims()) {
    throw InputShapeError("posterior: Xstar has " + std::to_string(xstar.cols()) +
                          " columns, expected " + std::to_string(data.num_dims()));
  }
  const Eigen::Index nx = data.num_points();
  const Eigen::Index nt = data.num_fidelities();
  const Eigen::Index m = xstar.rows();
  const MatrixXd cross = eval_core(model.params(), data.x, xstar);
  const MatrixXd prior = eval_core(model.params(), xstar, xstar);
  const MatrixXd sigma = model.task().covariance();
  const auto& lower = model.factor().llt.matrixL();

  std::vector<FidelityPosterior> out;
  for (Eigen::Index k = 0; k < nt; ++k) {
    MatrixXd kstar(nx * nt, m);
    for (Eigen::Index l = 0; l < nt; ++l) kstar.block(l * nx, 0, nx, m) = sigma(l, k) * cross;
    FidelityPosterior post;
    post.mean = kstar.transpose() * model.alpha();
    MatrixXd v = lower.solve(kstar);
    post.covariance = sigma(k, k) * prior - v.transpose() * v;
    post.covariance = 0.5 * (post.covariance + post.covariance.transpose());
    out.push_back(std::move(post));
  }
  return out;
}

SyntheticTaskPosterior synthetic_task_posterior(const MogpModel& model, const VectorXd& task_cross,
                                                double task_var) {
  const MatrixXd sigma = model.task().covariance();
  const Eigen::Index nt = sigma.rows();
  if (task_cross.size() != nt) {
    throw InputShapeError("synthetic task: cross covariance has length " +
                          std::to_string(task_cross.size()) + ", expected " + std::to_string(nt));
  }
  MatrixXd expanded(nt + 1, nt + 1);
  expanded.topLeftCorner(nt, nt) = sigma;
  expanded.block(0, nt, nt, 1) = task_cross;
  expanded.block(nt, 0, 1, nt) = task_cross.transpose();
  expanded(nt, nt) = task_var;
  const double scale = std::max(1.0, expanded.diagonal().cwiseAbs().maxCoeff());
  const double min_eig = min_eigenvalue(expanded);
  if (!std::isfinite(task_var) || min_eig < -1e-10 * scale) {
    throw InvalidTaskCovarianceError("synthetic task: expanded task matrix is not PSD", min_eig);
  }

  SyntheticTaskPosterior out;
  out.contribution = sigma.ldlt().solve(task_cross);
  out.task_variance = std::max(0.0, task_var - task_cross.dot(out.contribution));
  const MatrixXd kc = model.core_matrix();
  const auto& noise = model.params().noise_variance;
  if (std::all_of(noise.begin(), noise.end(), [](double v) { return v == 0.0; })) {
    out.mean = model.data().y * out.contribution;
    out.covariance = out.task_variance * kc;
    return out;
  }
  // With observation noise Y is not the latent function, so condition the
  // extra task on the data directly; this reduces to the compact form as
  // the noise goes to zero.
  const Eigen::Index nx = kc.rows();
  MatrixXd cross(nx * nt, nx);
  for (Eigen::Index k = 0; k < nt; ++k) cross.block(k * nx, 0, nx, nx) = task_cross(k) * kc;
  out.mean = cross.transpose() * model.alpha();
  const MatrixXd v = model.factor().llt.matrixL().solve(cross);
  out.covariance = task_var * kc - v.transpose() * v;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

}  // namespace synthfid
