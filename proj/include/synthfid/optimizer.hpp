#pragma once

#include "synthfid/linalg.hpp"

#include <functional>

namespace synthfid {

struct LbfgsSettings {
  int max_iterations = 200;
  int memory = 10;
  double gradient_tolerance = 1e-6;
  /// Stop when the relative decrease of the objective stays below this.
  double relative_tolerance = 1e-11;
  int max_line_search_steps = 40;
};

struct LbfgsResult {
  VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Objective returning f(x) and writing df/dx. May throw; a throwing or
/// non-finite evaluation is treated as an infeasible point by the line search.
using Objective = std::function<double(const VectorXd&, VectorXd&)>;

/// Minimizes `f` with limited-memory BFGS and a backtracking Armijo search.
/// The returned value is never worse than f(x0).
LbfgsResult minimize_lbfgs(const Objective& f, VectorXd x0, const LbfgsSettings& settings = {});

}  // namespace synthfid
