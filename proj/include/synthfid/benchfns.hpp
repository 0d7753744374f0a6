#pragma once

#include "synthfid/dataset.hpp"
#include "synthfid/linalg.hpp"

#include <string>
#include <utility>
#include <vector>

namespace synthfid {

enum class Fidelity { Low, High };

using PointFunction = double (*)(const VectorXd&);

/// An analytic ground-truth function with a cheaper low-fidelity proxy.
struct BenchmarkPair {
  std::string name;
  Eigen::Index dims = 1;
  std::vector<std::pair<double, double>> box;
  PointFunction high = nullptr;
  PointFunction low = nullptr;
  std::string citation;
};

/// Known pairs: "liu" (1-D) and "currin" (2-D). Throws InvalidDataError
/// for other names.
const BenchmarkPair& benchmark(const std::string& name);
std::vector<std::string> benchmark_names();

/// Row-wise evaluation. Throws DomainError naming the first row outside the box.
VectorXd evaluate(const BenchmarkPair& pair, Fidelity fidelity, const MatrixXd& x);

/// Uniform tensor grid with `points_per_dim` points per axis, first axis
/// varying slowest. Fidelity 0 is the high fidelity (ground truth), 1 the low.
FidelityDataset grid(const BenchmarkPair& pair, int points_per_dim);

}  // namespace synthfid
