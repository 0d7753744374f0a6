#pragma once

#include "synthfid/linalg.hpp"

#include <cstdint>
#include <vector>

namespace synthfid {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  double width() const { return upper - lower; }
  double midpoint() const { return 0.5 * (lower + upper); }
  bool contains(double v, double slack = 0.0) const {
    return v >= lower - slack && v <= upper + slack;
  }
};

/// A complete, validated Pearson correlation vector for a synthetic sample
/// against the n_t + 1 basis columns.
struct CorrelationSpec {
  VectorXd values;              ///< P_c, length n_t + 1
  MatrixXd factor;              ///< lower factor of the expanded (n_t+2) correlation matrix
  std::vector<Interval> bounds; ///< live bounds at the time each entry was chosen
  MatrixXd reference;           ///< basis correlation matrix C

  /// Expanded correlation matrix C' = [[C, P_c], [P_c^T, 1]].
  MatrixXd expanded() const;
  /// 1 - |l|^2 for the synthetic row l of the factor. Zero means the
  /// synthetic sample lies in the span of the basis, which is what the
  /// sampler can realize exactly.
  double span_residual() const;
};

/// Sequential construction of a correlation vector, each entry bounded so
/// that the expanded correlation matrix stays PSD with unit diagonal.
///
/// The factor of C is embedded in an (n+1)-row lower factor whose last row
/// collects the synthetic sample's coordinates. Entry i is admissible iff the
/// coordinate l_i = (P_c,i - L_i,:i . l_:i) / L_ii keeps |l| <= 1.
class BoundsSession {
public:
  /// Throws InvalidCorrelationMatrixError unless `c` is a symmetric PSD
  /// matrix with unit diagonal and entries in [-1, 1].
  static BoundsSession begin(const MatrixXd& c);

  Eigen::Index size() const { return reference_.rows(); }
  Eigen::Index cursor() const { return cursor_; }
  bool complete() const { return cursor_ == size(); }
  /// True when the next entry is the correlation to the prior draw (last basis column).
  bool next_is_final() const { return cursor_ + 1 == size(); }

  /// Closed-form admissible interval for the next entry.
  Interval bounds_for_next() const;

  /// Records `value` (inclusive bounds with 1e-12 slack). Throws RangeError.
  void choose(double value);

  enum class Endpoint { Lower, Upper };
  void choose_endpoint(Endpoint which);

  const std::vector<double>& chosen() const { return values_; }
  const MatrixXd& factor() const { return factor_; }
  const MatrixXd& reference() const { return reference_; }

  /// Throws ProtocolError if entries remain.
  CorrelationSpec finalize() const;

private:
  MatrixXd reference_;
  MatrixXd factor_;
  Eigen::Index cursor_ = 0;
  std::vector<double> values_;
  std::vector<Interval> bounds_;
};

/// Completes `session` by drawing each remaining entry uniformly within its
/// live bounds. The final entry (prior draw) is placed at one of its two
/// endpoints chosen by a fair coin, so the result is realizable by the
/// sampler. Deterministic in `seed`.
CorrelationSpec sample_random(BoundsSession session, std::uint64_t seed);

}  // namespace synthfid

namespace synthfid {

/// Feeds `values` into `session` in order and completes the remainder:
/// zero-width entries take their forced value and an omitted final entry
/// takes its upper endpoint. A supplied final entry must match one of its
/// endpoints within `endpoint_tolerance` and is snapped onto it. Throws
/// RangeError for out-of-bounds values or unresolved free entries.
CorrelationSpec complete_with_values(BoundsSession session, const std::vector<double>& values,
                                     double endpoint_tolerance = 1e-6);

}  // namespace synthfid
