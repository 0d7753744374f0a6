#pragma once

// Independent reference implementations used by the tests. Everything here
// is written with plain loops and general-purpose solvers so that it shares
// no code path with the library beyond the hyperparameter structs.

#include "synthfid/kernel.hpp"
#include "synthfid/linalg.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

using synthfid::KernelHyperparams;
using synthfid::KernelKind;
using synthfid::MatrixXd;
using synthfid::VectorXd;

inline double kernel(const KernelHyperparams& p, const VectorXd& a, const VectorXd& b) {
  const double pi = std::numbers::pi;
  if (p.kind == KernelKind::Rbf) {
    double s = 0.0;
    for (int d = 0; d < a.size(); ++d) {
      double r = (a(d) - b(d)) / p.lengthscales(d);
      s += r * r;
    }
    return p.signal_variance * std::exp(-0.5 * s);
  }
  double total = 0.0;
  for (const auto& c : p.components) {
    double term = c.weight;
    for (int d = 0; d < a.size(); ++d) {
      double tau = a(d) - b(d);
      term *= std::exp(-2.0 * pi * pi * tau * tau * c.variance(d)) *
              std::cos(2.0 * pi * tau * c.mean(d));
    }
    total += term;
  }
  return total;
}

inline MatrixXd core(const KernelHyperparams& p, const MatrixXd& a, const MatrixXd& b) {
  MatrixXd k(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.rows(); ++j) k(i, j) = kernel(p, a.row(i).transpose(), b.row(j).transpose());
  }
  return k;
}

/// Entry ((k,i),(l,j)) = t_kl k(x_i, x_j) + noise_k [k==l, i==j], fidelity-major.
inline MatrixXd coreg(const KernelHyperparams& p, const MatrixXd& task, const MatrixXd& x,
                      const std::vector<double>& noise) {
  const int n = static_cast<int>(x.rows());
  const int t = static_cast<int>(task.rows());
  MatrixXd k(n * t, n * t);
  for (int a = 0; a < t; ++a) {
    for (int i = 0; i < n; ++i) {
      for (int b = 0; b < t; ++b) {
        for (int j = 0; j < n; ++j) {
          double v = task(a, b) * kernel(p, x.row(i).transpose(), x.row(j).transpose());
          if (a == b && i == j) v += noise[noise.size() == 1 ? 0 : a];
          k(a * n + i, b * n + j) = v;
        }
      }
    }
  }
  return k;
}

/// Gaussian log density via LU (no Cholesky).
inline double lml(const MatrixXd& k, const VectorXd& y) {
  Eigen::FullPivLU<MatrixXd> lu(k);
  double logdet = 0.0;
  const MatrixXd& m = lu.matrixLU();
  for (int i = 0; i < m.rows(); ++i) logdet += std::log(std::abs(m(i, i)));
  const VectorXd alpha = lu.solve(y);
  return -0.5 * y.dot(alpha) - 0.5 * logdet -
         0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

struct Gaussian {
  VectorXd mean;
  MatrixXd cov;
};

/// Conditions a joint Gaussian on observed indices `obs` with values y and
/// returns the law of the remaining indices `pred`.
inline Gaussian condition(const MatrixXd& k, const std::vector<int>& obs, const VectorXd& y,
                          const std::vector<int>& pred) {
  const int no = static_cast<int>(obs.size());
  const int np = static_cast<int>(pred.size());
  MatrixXd koo(no, no), kpo(np, no), kpp(np, np);
  for (int i = 0; i < no; ++i)
    for (int j = 0; j < no; ++j) koo(i, j) = k(obs[i], obs[j]);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < no; ++j) kpo(i, j) = k(pred[i], obs[j]);
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < np; ++j) kpp(i, j) = k(pred[i], pred[j]);
  Eigen::FullPivLU<MatrixXd> lu(koo);
  Gaussian g;
  g.mean = kpo * lu.solve(y);
  g.cov = kpp - kpo * lu.solve(MatrixXd(kpo.transpose()));
  return g;
}

/// Two-pass scalar Pearson correlation.
inline double pearson(const VectorXd& a, const VectorXd& b) {
  const int n = static_cast<int>(a.size());
  double ma = 0.0, mb = 0.0;
  for (int i = 0; i < n; ++i) {
    ma += a(i);
    mb += b(i);
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (int i = 0; i < n; ++i) {
    sab += (a(i) - ma) * (b(i) - mb);
    saa += (a(i) - ma) * (a(i) - ma);
    sbb += (b(i) - mb) * (b(i) - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double min_eigenvalue(const MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Random full-rank correlation matrix from the Gram matrix of random
/// vectors in `dim` >= n dimensions.
inline MatrixXd random_correlation(int n, synthfid::Rng& rng, int dim) {
  MatrixXd v(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) v(i, j) = rng.normal();
  for (int i = 0; i < n; ++i) v.row(i).normalize();
  MatrixXd c = v * v.transpose();
  c.diagonal().setOnes();
  return c;
}

/// Random symmetric positive definite matrix with entries of order one.
inline MatrixXd random_spd(int n, synthfid::Rng& rng) {
  MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + 0.5 * MatrixXd::Identity(n, n);
}

}  // namespace oracle
