#include "synthfid/corrbounds.hpp"

#include "synthfid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace synthfid {
namespace {

constexpr double kPivotTolerance = 1e-10;
constexpr double kChooseSlack = 1e-12;
// 1 - |l|^2 may come out slightly negative from roundoff
constexpr double kRemainderFloor = -1e-12;

std::string describe(const Interval& iv) {
  std::ostringstream os;
  os.precision(17);
  os << "[" << iv.lower << ", " << iv.upper << "]";
  return os.str();
}

}  // namespace

MatrixXd CorrelationSpec::expanded() const {
  const Eigen::Index n = reference.rows();
  MatrixXd out(n + 1, n + 1);
  out.topLeftCorner(n, n) = reference;
  out.block(0, n, n, 1) = values;
  out.block(n, 0, 1, n) = values.transpose();
  out(n, n) = 1.0;
  return out;
}

double CorrelationSpec::span_residual() const {
  const Eigen::Index n = reference.rows();
  return 1.0 - factor.row(n).head(n).squaredNorm();
}

BoundsSession BoundsSession::begin(const MatrixXd& c) {
  if (c.rows() != c.cols() || c.rows() == 0) {
    throw InvalidCorrelationMatrixError("correlation matrix must be square and non-empty");
  }
  if (!c.allFinite()) throw InvalidCorrelationMatrixError("correlation matrix has non-finite entries");
  if (relative_asymmetry(c) > 1e-10) {
    throw InvalidCorrelationMatrixError("correlation matrix is not symmetric");
  }
  if ((c.diagonal().array() - 1.0).abs().maxCoeff() > 1e-10) {
    throw InvalidCorrelationMatrixError("correlation matrix must have unit diagonal");
  }
  if (c.cwiseAbs().maxCoeff() > 1.0 + 1e-12) {
    throw InvalidCorrelationMatrixError("correlation matrix has an entry outside [-1, 1]");
  }

  const Eigen::Index n = c.rows();
  BoundsSession s;
  s.reference_ = c;
  s.factor_ = MatrixXd::Zero(n + 1, n + 1);
  // semi-definite Cholesky: zero pivots allowed for duplicated columns
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = c(j, j) - s.factor_.row(j).head(j).squaredNorm();
    if (d < -kPivotTolerance) {
      throw InvalidCorrelationMatrixError("correlation matrix is not positive semi-definite");
    }
    if (d <= kPivotTolerance) {
      for (Eigen::Index i = j + 1; i < n; ++i) {
        double r = c(i, j) - s.factor_.row(i).head(j).dot(s.factor_.row(j).head(j));
        if (std::abs(r) > 1e-7) {
          throw InvalidCorrelationMatrixError("correlation matrix is not positive semi-definite");
        }
      }
      continue;
    }
    s.factor_(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      s.factor_(i, j) = (c(i, j) - s.factor_.row(i).head(j).dot(s.factor_.row(j).head(j))) /
                        s.factor_(j, j);
    }
  }
  s.factor_(n, n) = 1.0;
  return s;
}

Interval BoundsSession::bounds_for_next() const {
  if (complete()) throw ProtocolError("bounds session: every entry has already been chosen");
  const Eigen::Index i = cursor_;
  const Eigen::Index p = size();
  const double partial = factor_.row(p).head(i).dot(factor_.row(i).head(i));
  double remainder = 1.0 - factor_.row(p).head(i).squaredNorm();
  if (remainder < 0.0 && remainder >= kRemainderFloor) remainder = 0.0;
  const double half = factor_(i, i) * std::sqrt(std::max(remainder, 0.0));
  return {partial - half, partial + half};
}

void BoundsSession::choose(double value) {
  const Interval iv = bounds_for_next();
  if (!std::isfinite(value) || !iv.contains(value, kChooseSlack)) {
    std::ostringstream os;
    os.precision(17);
    os << "correlation entry " << cursor_ << " = " << value << " outside valid interval "
       << describe(iv);
    throw RangeError(os.str(), iv.lower, iv.upper);
  }
  const Eigen::Index i = cursor_;
  const Eigen::Index p = size();
  double coordinate = 0.0;
  if (factor_(i, i) > 0.0) {
    const double partial = factor_.row(p).head(i).dot(factor_.row(i).head(i));
    const double limit = std::sqrt(std::max(0.0, 1.0 - factor_.row(p).head(i).squaredNorm()));
    coordinate = std::clamp((value - partial) / factor_(i, i), -limit, limit);
  }
  factor_(p, i) = coordinate;
  values_.push_back(value);
  bounds_.push_back(iv);
  ++cursor_;
  if (complete()) {
    factor_(p, p) = std::sqrt(std::max(0.0, 1.0 - factor_.row(p).head(p).squaredNorm()));
  }
}

void BoundsSession::choose_endpoint(Endpoint which) {
  const Interval iv = bounds_for_next();
  choose(which == Endpoint::Upper ? iv.upper : iv.lower);
}

CorrelationSpec BoundsSession::finalize() const {
  if (!complete()) {
    throw ProtocolError("bounds session: " + std::to_string(size() - cursor_) +
                        " entries still unspecified");
  }
  CorrelationSpec spec;
  spec.values = Eigen::Map<const VectorXd>(values_.data(), static_cast<Eigen::Index>(values_.size()));
  spec.factor = factor_;
  spec.bounds = bounds_;
  spec.reference = reference_;
  return spec;
}

CorrelationSpec sample_random(BoundsSession session, std::uint64_t seed) {
  Rng rng(seed);
  while (!session.complete()) {
    if (session.next_is_final()) {
      session.choose_endpoint(rng.uniform() < 0.5 ? BoundsSession::Endpoint::Lower
                                                  : BoundsSession::Endpoint::Upper);
    } else {
      const Interval iv = session.bounds_for_next();
      session.choose(std::clamp(rng.uniform(iv.lower, iv.upper), iv.lower, iv.upper));
    }
  }
  return session.finalize();
}

}  // namespace synthfid

namespace synthfid {

CorrelationSpec complete_with_values(BoundsSession session, const std::vector<double>& values,
                                     double endpoint_tolerance) {
  for (double v : values) {
    if (session.complete()) {
      throw RangeError("too many correlation values: expected at most " +
                           std::to_string(session.size()),
                       0.0, 0.0);
    }
    const Interval iv = session.bounds_for_next();
    if (!session.next_is_final()) {
      session.choose(v);
      continue;
    }
    if (std::abs(v - iv.upper) <= endpoint_tolerance) {
      session.choose_endpoint(BoundsSession::Endpoint::Upper);
    } else if (std::abs(v - iv.lower) <= endpoint_tolerance) {
      session.choose_endpoint(BoundsSession::Endpoint::Lower);
    } else {
      std::ostringstream os;
      os.precision(17);
      os << "correlation to the prior draw must be one of the endpoints " << iv.lower << " or "
         << iv.upper << ", got " << v;
      throw RangeError(os.str(), iv.lower, iv.upper);
    }
  }
  while (!session.complete()) {
    const Interval iv = session.bounds_for_next();
    if (session.next_is_final()) {
      session.choose_endpoint(BoundsSession::Endpoint::Upper);
    } else if (iv.width() <= 1e-9) {
      session.choose(iv.midpoint());
    } else {
      throw RangeError("correlation entry " + std::to_string(session.cursor()) +
                           " is not determined; choose a value in " + describe(iv),
                       iv.lower, iv.upper);
    }
  }
  return session.finalize();
}

}  // namespace synthfid
