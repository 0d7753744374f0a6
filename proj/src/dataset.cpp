#include "synthfid/dataset.hpp"

#include "synthfid/errors.hpp"

#include <set>

namespace synthfid {

FidelityDataset::FidelityDataset(MatrixXd x_in, MatrixXd y_in, std::vector<std::string> labels_in,
                                 std::string source_in)
    : x(std::move(x_in)), y(std::move(y_in)), labels(std::move(labels_in)),
      source(std::move(source_in)) {
  if (labels.empty()) {
    for (Eigen::Index k = 0; k < y.cols(); ++k) labels.push_back("f" + std::to_string(k));
  }
  validate();
}

void FidelityDataset::validate() const {
  if (x.rows() != y.rows()) {
    throw InputShapeError("dataset: X has " + std::to_string(x.rows()) + " rows but Y has " +
                          std::to_string(y.rows()));
  }
  if (x.rows() < 2) throw InvalidDataError("dataset: need at least 2 domain points");
  if (x.cols() < 1) throw InvalidDataError("dataset: need at least 1 input dimension");
  if (y.cols() < 1) throw InvalidDataError("dataset: need at least 1 fidelity");
  if (!x.allFinite() || !y.allFinite()) {
    throw InvalidDataError("dataset: NaN or infinite entries");
  }
  if (static_cast<Eigen::Index>(labels.size()) != y.cols()) {
    throw InputShapeError("dataset: one label per fidelity required");
  }
  std::set<std::string> unique(labels.begin(), labels.end());
  if (unique.size() != labels.size()) throw InvalidDataError("dataset: fidelity labels must be unique");
}

}  // namespace synthfid
