#include "synthfid/benchfns.hpp"

#include "synthfid/errors.hpp"

#include <algorithm>
#include <cmath>

namespace synthfid {
namespace {

// Liu et al. (2018), 1-D example on [0, 1]:
//   high(x) = (6x - 2)^2 sin(12x - 4)
//   low(x)  = 0.5 high(x) + 10 (x - 0.5) - 5
double liu_high(const VectorXd& x) {
  const double t = 6.0 * x(0) - 2.0;
  return t * t * std::sin(12.0 * x(0) - 4.0);
}

double liu_low(const VectorXd& x) { return 0.5 * liu_high(x) + 10.0 * (x(0) - 0.5) - 5.0; }

// Currin et al. (1991) on [0, 1]^2:
//   high(x) = [1 - exp(-1 / (2 x2))] (2300 x1^3 + 1900 x1^2 + 2092 x1 + 60)
//                                    / (100 x1^3 + 500 x1^2 + 4 x1 + 20)
// The exponential factor tends to 1 as x2 -> 0+.
double currin_formula(double x1, double x2) {
  const double factor = x2 > 0.0 ? 1.0 - std::exp(-1.0 / (2.0 * x2)) : 1.0;
  const double num = ((2300.0 * x1 + 1900.0) * x1 + 2092.0) * x1 + 60.0;
  const double den = ((100.0 * x1 + 500.0) * x1 + 4.0) * x1 + 20.0;
  return factor * num / den;
}

double currin_high(const VectorXd& x) { return currin_formula(x(0), x(1)); }

//   low(x) = 1/4 [high(x1 + .05, x2 + .05) + high(x1 + .05, max(0, x2 - .05))]
//          + 1/4 [high(x1 - .05, x2 + .05) + high(x1 - .05, max(0, x2 - .05))]
double currin_low(const VectorXd& x) {
  const double a = x(0) + 0.05;
  const double b = x(0) - 0.05;
  const double up = x(1) + 0.05;
  const double down = std::max(0.0, x(1) - 0.05);
  return 0.25 * (currin_formula(a, up) + currin_formula(a, down)) +
         0.25 * (currin_formula(b, up) + currin_formula(b, down));
}

const std::vector<BenchmarkPair>& registry() {
  static const std::vector<BenchmarkPair> pairs = {
      {"liu", 1, {{0.0, 1.0}}, liu_high, liu_low, "Liu et al. 2018"},
      {"currin", 2, {{0.0, 1.0}, {0.0, 1.0}}, currin_high, currin_low, "Currin et al. 1991"},
  };
  return pairs;
}

}  // namespace

const BenchmarkPair& benchmark(const std::string& name) {
  for (const auto& p : registry()) {
    if (p.name == name) return p;
  }
  throw InvalidDataError("unknown benchmark '" + name + "' (known: liu, currin)");
}

std::vector<std::string> benchmark_names() {
  std::vector<std::string> names;
  for (const auto& p : registry()) names.push_back(p.name);
  return names;
}

VectorXd evaluate(const BenchmarkPair& pair, Fidelity fidelity, const MatrixXd& x) {
  if (x.cols() != pair.dims) {
    throw InputShapeError("benchmark '" + pair.name + "' expects " + std::to_string(pair.dims) +
                          " input columns, got " + std::to_string(x.cols()));
  }
  const PointFunction f = fidelity == Fidelity::High ? pair.high : pair.low;
  VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index d = 0; d < pair.dims; ++d) {
      const auto [lo, hi] = pair.box[static_cast<std::size_t>(d)];
      const double v = x(i, d);
      if (!(v >= lo - 1e-12 && v <= hi + 1e-12)) {
        throw DomainError("benchmark '" + pair.name + "': row " + std::to_string(i) +
                              " lies outside the domain box",
                          static_cast<int>(i));
      }
    }
    out(i) = f(x.row(i).transpose());
  }
  return out;
}

FidelityDataset grid(const BenchmarkPair& pair, int points_per_dim) {
  if (points_per_dim < 2) throw InvalidDataError("grid: need at least 2 points per dimension");
  const auto per = static_cast<Eigen::Index>(points_per_dim);
  Eigen::Index total = 1;
  for (Eigen::Index d = 0; d < pair.dims; ++d) total *= per;
  MatrixXd x(total, pair.dims);
  for (Eigen::Index row = 0; row < total; ++row) {
    Eigen::Index rem = row;
    for (Eigen::Index d = pair.dims; d-- > 0;) {
      const Eigen::Index k = rem % per;
      rem /= per;
      const auto [lo, hi] = pair.box[static_cast<std::size_t>(d)];
      x(row, d) = k + 1 == per ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(per - 1);
    }
  }
  MatrixXd y(total, 2);
  y.col(0) = evaluate(pair, Fidelity::High, x);
  y.col(1) = evaluate(pair, Fidelity::Low, x);
  return FidelityDataset(std::move(x), std::move(y), {"high", "low"}, "benchmark:" + pair.name);
}

}  // namespace synthfid
