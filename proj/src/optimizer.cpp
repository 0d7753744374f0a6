#include "synthfid/optimizer.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace synthfid {
namespace {

bool try_eval(const Objective& f, const VectorXd& x, double& value, VectorXd& grad) {
  try {
    value = f(x, grad);
  } catch (const std::exception&) {
    return false;
  }
  return std::isfinite(value) && grad.allFinite();
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& f, VectorXd x0, const LbfgsSettings& settings) {
  LbfgsResult result;
  result.x = std::move(x0);
  VectorXd grad(result.x.size());
  if (!try_eval(f, result.x, result.value, grad)) {
    // caller decides what an infeasible start means
    result.value = f(result.x, grad);
    return result;
  }

  std::deque<VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int iter = 0; iter < settings.max_iterations; ++iter) {
    result.iterations = iter + 1;
    if (grad.lpNorm<Eigen::Infinity>() < settings.gradient_tolerance) {
      result.converged = true;
      break;
    }

    // two-loop recursion
    VectorXd q = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) {
      q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    } else {
      q /= std::max(1.0, grad.norm());
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    VectorXd direction = -q;
    double slope = grad.dot(direction);
    if (!(slope < 0.0)) {
      // not a descent direction: reset memory and use steepest descent
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      direction = -grad / std::max(1.0, grad.norm());
      slope = grad.dot(direction);
    }

    double step = 1.0;
    VectorXd x_new, grad_new(grad.size());
    double value_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < settings.max_line_search_steps; ++ls) {
      x_new = result.x + step * direction;
      if (try_eval(f, x_new, value_new, grad_new) &&
          value_new <= result.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    VectorXd s = x_new - result.x;
    VectorXd y = grad_new - grad;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > settings.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    double decrease = result.value - value_new;
    result.x = std::move(x_new);
    result.value = value_new;
    grad = grad_new;
    if (decrease <= settings.relative_tolerance * std::max(1.0, std::abs(result.value))) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace synthfid
