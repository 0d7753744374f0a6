#include "oracles.hpp"

#include "synthfid/errors.hpp"
#include "synthfid/kernel.hpp"

#include <doctest.h>

using namespace synthfid;

namespace {

KernelHyperparams random_sm(Rng& rng, int dims, int q, double noise = 0.0) {
  std::vector<SpectralComponent> comps;
  for (int i = 0; i < q; ++i) {
    SpectralComponent c;
    c.weight = rng.uniform(0.1, 2.0);
    c.mean = VectorXd(dims);
    c.variance = VectorXd(dims);
    for (int d = 0; d < dims; ++d) {
      c.mean(d) = rng.uniform(0.0, 3.0);
      c.variance(d) = rng.uniform(0.05, 2.0);
    }
    comps.push_back(c);
  }
  return KernelHyperparams::spectral_mixture(comps, noise);
}

KernelHyperparams random_rbf(Rng& rng, int dims, double noise = 0.0) {
  VectorXd ls(dims);
  for (int d = 0; d < dims; ++d) ls(d) = rng.uniform(0.1, 1.5);
  return KernelHyperparams::rbf(ls, rng.uniform(0.5, 3.0), noise);
}

MatrixXd random_points(Rng& rng, int n, int dims) {
  MatrixXd x(n, dims);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dims; ++d) x(i, d) = rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

TEST_SUITE("kernel") {

TEST_CASE("rbf at zero distance is the signal variance") {
  auto p = KernelHyperparams::rbf(VectorXd::Constant(2, 0.3), 2.5);
  MatrixXd x(1, 2);
  x << 0.4, -0.1;
  MatrixXd k = eval_core(p, x, x);
  REQUIRE(k.rows() == 1);
  REQUIRE(k.cols() == 1);
  CHECK(k(0, 0) == 2.5);
}

TEST_CASE("spectral mixture at zero lag is the weight sum") {
  Rng rng(1);
  auto p = random_sm(rng, 2, 4);
  double total = 0.0;
  for (const auto& c : p.components) total += c.weight;
  MatrixXd x = random_points(rng, 5, 2);
  MatrixXd k = eval_core(p, x, x);
  for (int i = 0; i < 5; ++i) CHECK(k(i, i) == doctest::Approx(total).epsilon(1e-14));
}

TEST_CASE("rbf unit lengthscale between 0 and 1") {
  auto p = KernelHyperparams::rbf(VectorXd::Ones(1), 1.0);
  MatrixXd a(1, 1), b(1, 1);
  a << 0.0;
  b << 1.0;
  double v = eval_core(p, a, b)(0, 0);
  CHECK(v == doctest::Approx(0.6065306597126334).epsilon(1e-15));
  CHECK(v == doctest::Approx(oracle::kernel(p, a.row(0).transpose(), b.row(0).transpose())));
}

TEST_CASE("eval_core matches a scalar implementation") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    int dims = 1 + trial % 3;
    auto p = trial % 2 ? random_sm(rng, dims, 1 + trial % 4) : random_rbf(rng, dims);
    MatrixXd a = random_points(rng, 7, dims);
    MatrixXd b = random_points(rng, 4, dims);
    MatrixXd k = eval_core(p, a, b);
    REQUIRE(k.rows() == 7);
    REQUIRE(k.cols() == 4);
    CHECK((k - oracle::core(p, a, b)).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("square kernel matrices are symmetric and factorizable") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = trial % 2 ? random_sm(rng, 2, 3) : random_rbf(rng, 2);
    MatrixXd x = random_points(rng, 15, 2);
    MatrixXd k = eval_core(p, x, x);
    CHECK(relative_asymmetry(k) <= 1e-12);
    CHECK_NOTHROW(jittered_cholesky(k));
  }
}

TEST_CASE("spectral mixture depends only on the lag") {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = random_sm(rng, 2, 4);
    MatrixXd a = random_points(rng, 8, 2);
    MatrixXd b = random_points(rng, 6, 2);
    Eigen::RowVector2d shift(rng.uniform(-5, 5), rng.uniform(-5, 5));
    MatrixXd a2 = a.rowwise() + shift;
    MatrixXd b2 = b.rowwise() + shift;
    CHECK((eval_core(p, a, b) - eval_core(p, a2, b2)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("dimension mismatch is rejected") {
  auto p = KernelHyperparams::rbf(VectorXd::Ones(2), 1.0);
  CHECK_THROWS_AS(eval_core(p, MatrixXd::Zero(3, 1), MatrixXd::Zero(3, 2)), InputShapeError);
  CHECK_THROWS_AS(eval_core(p, MatrixXd::Zero(3, 2), MatrixXd::Zero(3, 3)), InputShapeError);
}

TEST_CASE("hyperparameter validation") {
  auto p = KernelHyperparams::rbf(VectorXd::Ones(2), 1.0, 0.0);
  CHECK_NOTHROW(p.validate());
  p.signal_variance = 0.0;
  CHECK_THROWS_AS(p.validate(), InvalidDataError);

  Rng rng(5);
  auto sm = random_sm(rng, 2, 2);
  CHECK_NOTHROW(sm.validate());
  sm.components[1].weight = -1.0;
  CHECK_THROWS_AS(sm.validate(), InvalidDataError);
  sm = random_sm(rng, 2, 2);
  sm.components[0].variance = VectorXd::Ones(3);
  CHECK_THROWS_AS(sm.validate(), InputShapeError);
  sm = random_sm(rng, 2, 2);
  sm.components.clear();
  CHECK_THROWS_AS(sm.validate(), InputShapeError);
  sm = random_sm(rng, 2, 2);
  sm.noise_variance = {-1e-3};
  CHECK_THROWS_AS(sm.validate(), InvalidDataError);

  CHECK(kernel_kind_from_string("rbf") == KernelKind::Rbf);
  CHECK(kernel_kind_from_string("spectral_mixture") == KernelKind::SpectralMixture);
  CHECK_THROWS_AS(kernel_kind_from_string("matern"), InvalidDataError);
}

TEST_CASE("log parameters round trip") {
  Rng rng(6);
  auto sm = random_sm(rng, 2, 3);
  CHECK(sm.num_log_params() == 3 * 5);
  auto back = sm.with_log_params(sm.log_params());
  MatrixXd x = random_points(rng, 5, 2);
  CHECK((eval_core(sm, x, x) - eval_core(back, x, x)).cwiseAbs().maxCoeff() < 1e-13);

  auto rbf = random_rbf(rng, 3);
  CHECK(rbf.num_log_params() == 4);
  VectorXd lp = rbf.log_params();
  CHECK(lp(3) == doctest::Approx(std::log(rbf.signal_variance)));
  CHECK_THROWS_AS(rbf.with_log_params(VectorXd::Zero(2)), InputShapeError);
}

TEST_CASE("gradient contraction matches finite differences") {
  Rng rng(7);
  for (int trial = 0; trial < 6; ++trial) {
    int dims = 1 + trial % 2;
    auto p = trial < 3 ? random_sm(rng, dims, 2) : random_rbf(rng, dims);
    MatrixXd x = random_points(rng, 9, dims);
    MatrixXd w(9, 9);
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 9; ++j) w(i, j) = rng.normal();
    VectorXd g = core_gradient_contract(p, x, w);
    VectorXd lp = p.log_params();
    REQUIRE(g.size() == lp.size());
    for (int k = 0; k < lp.size(); ++k) {
      const double h = 1e-6;
      VectorXd up = lp, dn = lp;
      up(k) += h;
      dn(k) -= h;
      double fd = (eval_core(p.with_log_params(up), x, x).cwiseProduct(w).sum() -
                   eval_core(p.with_log_params(dn), x, x).cwiseProduct(w).sum()) /
                  (2 * h);
      CHECK(g(k) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("task matrix construction") {
  MatrixXd s(2, 2);
  s << 4, 2, 2, 3;
  auto t = TaskMatrix::from_covariance(s);
  CHECK((t.covariance() - s).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(t.factor()(0, 1) == 0.0);

  MatrixXd rank_one(2, 2);
  rank_one << 1, 2, 2, 4;
  CHECK((TaskMatrix::from_covariance(rank_one).covariance() - rank_one).cwiseAbs().maxCoeff() < 1e-12);

  MatrixXd indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  CHECK_THROWS_AS(TaskMatrix::from_covariance(indefinite), InvalidTaskCovarianceError);
  CHECK(TaskMatrix::identity(3).covariance() == MatrixXd::Identity(3, 3));
}

TEST_CASE("coregionalization with identity task matrix is block diagonal") {
  Rng rng(8);
  auto p = random_rbf(rng, 1, 0.05);
  MatrixXd x = random_points(rng, 6, 1);
  MatrixXd kc = eval_core(p, x, x);
  MatrixXd k = eval_coreg(p, TaskMatrix::identity(2), x);
  MatrixXd block = kc + 0.05 * MatrixXd::Identity(6, 6);
  CHECK((k.topLeftCorner(6, 6) - block).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((k.bottomRightCorner(6, 6) - block).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(k.topRightCorner(6, 6).cwiseAbs().maxCoeff() == 0.0);
  CHECK(k.bottomLeftCorner(6, 6).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-task coregionalization is the core matrix plus noise") {
  Rng rng(9);
  auto p = random_sm(rng, 2, 2, 0.01);
  MatrixXd x = random_points(rng, 7, 2);
  MatrixXd k = eval_coreg(p, TaskMatrix::identity(1), x);
  MatrixXd expect = eval_core(p, x, x) + 0.01 * MatrixXd::Identity(7, 7);
  CHECK((k - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coregionalization matches per-entry evaluation") {
  Rng rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    int nt = 1 + trial % 3;
    int nx = 2 + static_cast<int>(rng.uniform() * 9);
    int dims = 1 + trial % 2;
    auto p = trial % 2 ? random_sm(rng, dims, 2) : random_rbf(rng, dims);
    std::vector<double> noise;
    if (trial % 4 == 0) {
      for (int k = 0; k < nt; ++k) noise.push_back(rng.uniform(0.0, 0.1));
    } else {
      noise.push_back(rng.uniform(0.0, 0.1));
    }
    p.noise_variance = noise;
    MatrixXd s = oracle::random_spd(nt, rng);
    auto task = TaskMatrix::from_covariance(s);
    MatrixXd x = random_points(rng, nx, dims);
    MatrixXd k = eval_coreg(p, task, x);
    MatrixXd expect = oracle::coreg(p, s, x, noise);
    CHECK((k - expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(relative_asymmetry(k) <= 1e-12);
  }
}

}
