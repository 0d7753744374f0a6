#pragma once

#include "synthfid/linalg.hpp"

#include <string>
#include <vector>

namespace synthfid {

/// Domain points shared by every fidelity (block design) plus one target
/// column per fidelity.
struct FidelityDataset {
  MatrixXd x;  ///< n_x by n_d
  MatrixXd y;  ///< n_x by n_t, column k holds fidelity k
  std::vector<std::string> labels;
  std::string source;

  FidelityDataset() = default;
  FidelityDataset(MatrixXd x, MatrixXd y, std::vector<std::string> labels = {},
                  std::string source = {});

  Eigen::Index num_points() const { return x.rows(); }
  Eigen::Index num_dims() const { return x.cols(); }
  Eigen::Index num_fidelities() const { return y.cols(); }

  /// Throws InvalidDataError / InputShapeError when an invariant is broken.
  void validate() const;
};

}  // namespace synthfid
