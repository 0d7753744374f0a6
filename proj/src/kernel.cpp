#include "synthfid/kernel.hpp"

#include "synthfid/errors.hpp"

#include <cmath>
#include <numbers>

namespace synthfid {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPiSq = 2.0 * kPi * kPi;

double rbf_value(const KernelHyperparams& p, const double* a, const double* b,
                 Eigen::Index a_stride, Eigen::Index b_stride, Eigen::Index dims) {
  double r2 = 0.0;
  for (Eigen::Index d = 0; d < dims; ++d) {
    double t = (a[d * a_stride] - b[d * b_stride]) / p.lengthscales(d);
    r2 += t * t;
  }
  return p.signal_variance * std::exp(-0.5 * r2);
}

double sm_value(const KernelHyperparams& p, const double* a, const double* b,
                Eigen::Index a_stride, Eigen::Index b_stride, Eigen::Index dims) {
  double total = 0.0;
  for (const auto& c : p.components) {
    double term = c.weight;
    for (Eigen::Index d = 0; d < dims; ++d) {
      double tau = a[d * a_stride] - b[d * b_stride];
      term *= std::exp(-kTwoPiSq * tau * tau * c.variance(d)) *
              std::cos(2.0 * kPi * tau * c.mean(d));
    }
    total += term;
  }
  return total;
}

void check_points(const KernelHyperparams& params, const MatrixXd& a, const char* name) {
  if (a.cols() != params.input_dim()) {
    throw InputShapeError(std::string("kernel: ") + name + " has " + std::to_string(a.cols()) +
                          " columns, kernel expects " + std::to_string(params.input_dim()));
  }
}

}  // namespace

std::string to_string(KernelKind kind) {
  return kind == KernelKind::Rbf ? "rbf" : "spectral_mixture";
}

KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "rbf") return KernelKind::Rbf;
  if (name == "spectral_mixture" || name == "sm") return KernelKind::SpectralMixture;
  throw InvalidDataError("unknown kernel kind '" + name + "'");
}

KernelHyperparams KernelHyperparams::rbf(VectorXd lengthscales, double signal_variance,
                                         double noise_variance) {
  KernelHyperparams p;
  p.kind = KernelKind::Rbf;
  p.lengthscales = std::move(lengthscales);
  p.signal_variance = signal_variance;
  p.noise_variance = {noise_variance};
  p.validate();
  return p;
}

KernelHyperparams KernelHyperparams::spectral_mixture(std::vector<SpectralComponent> components,
                                                      double noise_variance) {
  KernelHyperparams p;
  p.kind = KernelKind::SpectralMixture;
  p.components = std::move(components);
  p.noise_variance = {noise_variance};
  p.validate();
  return p;
}

Eigen::Index KernelHyperparams::input_dim() const {
  if (kind == KernelKind::Rbf) return lengthscales.size();
  return components.empty() ? 0 : components.front().mean.size();
}

double KernelHyperparams::noise_for(Eigen::Index fidelity) const {
  if (noise_variance.size() == 1) return noise_variance.front();
  return noise_variance.at(static_cast<std::size_t>(fidelity));
}

void KernelHyperparams::validate() const {
  if (noise_variance.empty()) {
    throw InputShapeError("kernel: noise variance list is empty");
  }
  for (double n : noise_variance) {
    if (!(n >= 0.0) || !std::isfinite(n)) {
      throw InvalidDataError("kernel: noise variance must be finite and non-negative");
    }
  }
  if (kind == KernelKind::Rbf) {
    if (lengthscales.size() == 0) throw InputShapeError("kernel: RBF needs at least one lengthscale");
    if (!(lengthscales.array() > 0.0).all() || !lengthscales.allFinite()) {
      throw InvalidDataError("kernel: RBF lengthscales must be positive");
    }
    if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
      throw InvalidDataError("kernel: RBF signal variance must be positive");
    }
    return;
  }
  if (components.empty()) throw InputShapeError("kernel: spectral mixture needs Q >= 1");
  Eigen::Index dims = components.front().mean.size();
  if (dims == 0) throw InputShapeError("kernel: spectral mixture needs at least one dimension");
  for (const auto& c : components) {
    if (c.mean.size() != dims || c.variance.size() != dims) {
      throw InputShapeError("kernel: spectral mixture component arrays must all have length n_d");
    }
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      throw InvalidDataError("kernel: spectral mixture weights must be positive");
    }
    if (!(c.mean.array() >= 0.0).all() || !c.mean.allFinite()) {
      throw InvalidDataError("kernel: spectral mixture means must be non-negative");
    }
    if (!(c.variance.array() > 0.0).all() || !c.variance.allFinite()) {
      throw InvalidDataError("kernel: spectral mixture variances must be positive");
    }
  }
}

Eigen::Index KernelHyperparams::num_log_params() const {
  if (kind == KernelKind::Rbf) return lengthscales.size() + 1;
  return static_cast<Eigen::Index>(components.size()) * (1 + 2 * input_dim());
}

VectorXd KernelHyperparams::log_params() const {
  VectorXd out(num_log_params());
  if (kind == KernelKind::Rbf) {
    out.head(lengthscales.size()) = lengthscales.array().log();
    out(lengthscales.size()) = std::log(signal_variance);
    return out;
  }
  Eigen::Index dims = input_dim();
  Eigen::Index k = 0;
  for (const auto& c : components) {
    out(k++) = std::log(c.weight);
    out.segment(k, dims) = c.mean.array().log();
    k += dims;
    out.segment(k, dims) = c.variance.array().log();
    k += dims;
  }
  return out;
}

KernelHyperparams KernelHyperparams::with_log_params(const VectorXd& log_params) const {
  if (log_params.size() != num_log_params()) {
    throw InputShapeError("kernel: wrong number of log parameters");
  }
  KernelHyperparams p = *this;
  if (kind == KernelKind::Rbf) {
    p.lengthscales = log_params.head(lengthscales.size()).array().exp();
    p.signal_variance = std::exp(log_params(lengthscales.size()));
    return p;
  }
  Eigen::Index dims = input_dim();
  Eigen::Index k = 0;
  for (auto& c : p.components) {
    c.weight = std::exp(log_params(k++));
    c.mean = log_params.segment(k, dims).array().exp();
    k += dims;
    c.variance = log_params.segment(k, dims).array().exp();
    k += dims;
  }
  return p;
}

TaskMatrix::TaskMatrix(MatrixXd lower) : factor_(std::move(lower)) {}

TaskMatrix TaskMatrix::from_factor(MatrixXd lower) {
  if (lower.rows() != lower.cols() || lower.rows() == 0) {
    throw InputShapeError("task matrix: factor must be square and non-empty");
  }
  lower.triangularView<Eigen::StrictlyUpper>().setZero();
  TaskMatrix t(std::move(lower));
  MatrixXd sigma = t.covariance();
  if (!(sigma.diagonal().array() > 0.0).all()) {
    throw InvalidDataError("task matrix: diagonal entries must be strictly positive");
  }
  return t;
}

TaskMatrix TaskMatrix::from_covariance(const MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
    throw InputShapeError("task matrix: covariance must be square and non-empty");
  }
  if (relative_asymmetry(sigma) > 1e-12) {
    throw InvalidDataError("task matrix: covariance is not symmetric");
  }
  const Eigen::Index n = sigma.rows();
  const double tol = 1e-12 * sigma.diagonal().cwiseAbs().maxCoeff();
  MatrixXd l = MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = sigma(j, j) - l.row(j).head(j).squaredNorm();
    if (d < -tol) {
      throw InvalidTaskCovarianceError("task matrix: covariance is not PSD", min_eigenvalue(sigma));
    }
    if (d <= tol) {
      // zero pivot: the column must be consistent with the earlier rows
      for (Eigen::Index i = j + 1; i < n; ++i) {
        double r = sigma(i, j) - l.row(i).head(j).dot(l.row(j).head(j));
        if (std::abs(r) > 1e-8 * std::sqrt(sigma(i, i) * sigma(j, j))) {
          throw InvalidTaskCovarianceError("task matrix: covariance is not PSD",
                                           min_eigenvalue(sigma));
        }
      }
      continue;
    }
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (sigma(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return from_factor(std::move(l));
}

TaskMatrix TaskMatrix::identity(Eigen::Index n) {
  return from_factor(MatrixXd::Identity(n, n));
}

MatrixXd eval_core(const KernelHyperparams& params, const MatrixXd& a, const MatrixXd& b) {
  check_points(params, a, "A");
  check_points(params, b, "B");
  const Eigen::Index dims = params.input_dim();
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.rows();
  const bool symmetric = (&a == &b) || (n == m && a == b);
  auto value = params.kind == KernelKind::Rbf ? rbf_value : sm_value;
  MatrixXd k(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = symmetric ? j : 0; i < n; ++i) {
      double v = value(params, a.data() + i, b.data() + j, n, m, dims);
      k(i, j) = v;
      if (symmetric) k(j, i) = v;
    }
  }
  return k;
}

MatrixXd eval_coreg(const KernelHyperparams& params, const TaskMatrix& task, const MatrixXd& x) {
  const Eigen::Index nt = task.size();
  if (params.noise_variance.size() != 1 &&
      static_cast<Eigen::Index>(params.noise_variance.size()) != nt) {
    throw InputShapeError("coregionalization: noise list length must be 1 or n_t");
  }
  const MatrixXd kc = eval_core(params, x, x);
  const MatrixXd sigma = task.covariance();
  const Eigen::Index nx = x.rows();
  MatrixXd k(nx * nt, nx * nt);
  for (Eigen::Index l = 0; l < nt; ++l) {
    for (Eigen::Index r = 0; r < nt; ++r) {
      k.block(r * nx, l * nx, nx, nx) = sigma(r, l) * kc;
    }
    k.block(l * nx, l * nx, nx, nx).diagonal().array() += params.noise_for(l);
  }
  return k;
}

VectorXd core_gradient_contract(const KernelHyperparams& params, const MatrixXd& x,
                                const MatrixXd& weights) {
  check_points(params, x, "X");
  const Eigen::Index n = x.rows();
  const Eigen::Index dims = params.input_dim();
  VectorXd grad = VectorXd::Zero(params.num_log_params());

  if (params.kind == KernelKind::Rbf) {
    VectorXd inv_l2 = params.lengthscales.array().square().inverse();
    VectorXd sq(dims);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = j; i < n; ++i) {
        double r2 = 0.0;
        for (Eigen::Index d = 0; d < dims; ++d) {
          double t = x(i, d) - x(j, d);
          sq(d) = t * t * inv_l2(d);
          r2 += sq(d);
        }
        const double w = i == j ? weights(i, i) : weights(i, j) + weights(j, i);
        double kw = params.signal_variance * std::exp(-0.5 * r2) * w;
        grad.head(dims) += kw * sq;
        grad(dims) += kw;
      }
    }
    return grad;
  }

  // spectral mixture: factor f_qd = exp(-2 pi^2 tau^2 v) cos(2 pi tau mu)
  const Eigen::Index stride = 1 + 2 * dims;
  VectorXd f(dims), dmu(dims), dv(dims), prefix(dims + 1), suffix(dims + 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      // dK is symmetric, so (i, j) and (j, i) share one evaluation
      const double w = i == j ? weights(i, i) : weights(i, j) + weights(j, i);
      if (w == 0.0) continue;
      for (std::size_t q = 0; q < params.components.size(); ++q) {
        const auto& c = params.components[q];
        for (Eigen::Index d = 0; d < dims; ++d) {
          double tau = x(i, d) - x(j, d);
          double e = std::exp(-kTwoPiSq * tau * tau * c.variance(d));
          double phase = 2.0 * kPi * tau * c.mean(d);
          f(d) = e * std::cos(phase);
          // d f / d log mu and d f / d log v
          dmu(d) = -e * std::sin(phase) * phase;
          dv(d) = -kTwoPiSq * tau * tau * c.variance(d) * f(d);
        }
        prefix(0) = 1.0;
        for (Eigen::Index d = 0; d < dims; ++d) prefix(d + 1) = prefix(d) * f(d);
        suffix(dims) = 1.0;
        for (Eigen::Index d = dims; d-- > 0;) suffix(d) = suffix(d + 1) * f(d);
        const Eigen::Index base = static_cast<Eigen::Index>(q) * stride;
        const double ww = c.weight * w;
        grad(base) += ww * prefix(dims);
        for (Eigen::Index d = 0; d < dims; ++d) {
          double others = prefix(d) * suffix(d + 1);
          grad(base + 1 + d) += ww * others * dmu(d);
          grad(base + 1 + dims + d) += ww * others * dv(d);
        }
      }
    }
  }
  return grad;
}

}  // namespace synthfid
