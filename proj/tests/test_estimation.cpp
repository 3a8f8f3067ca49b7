#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "walk/control.hpp"
#include "walk/estimation.hpp"

using namespace walk;

namespace {

// Embeds a scalar system in the first state so the 4-state filter can be
// probed with scalar algebra.
NoiseModel scalar_model(double q, double r) {
  NoiseModel nm;
  nm.C = MatrixXd::Zero(1, 4);
  nm.C(0, 0) = 1.0;
  nm.Q_proc = Mat4::Zero();
  nm.Q_proc(0, 0) = q;
  nm.R_meas = MatrixXd::Constant(1, 1, r);
  return nm;
}

DiscreteSystem scalar_system(double a) {
  DiscreteSystem d;
  d.Ad = Mat4::Identity() * 0.0;
  d.Ad(0, 0) = a;
  d.Bd = Mat42::Zero();
  d.dt = 0.02;
  return d;
}

// A stable synthetic plant for noise-driven filter runs.
DiscreteSystem stable_system() {
  DiscreteSystem d;
  d.Ad << 0.98, 0.019, 0.0, 0.0,
          -0.5, 0.97, 0.0, 0.0,
          0.0, 0.0, 0.99, 0.018,
          0.0, 0.0, -0.3, 0.96;
  d.Bd = Mat42::Zero();
  d.dt = 0.02;
  return d;
}

}  // namespace

TEST_CASE("kf_predict") {
  const NoiseModel nm = scalar_model(0.0, 1.0);
  SUBCASE("identity transition with zero noise keeps the state") {
    DiscreteSystem d;
    d.Ad = Mat4::Identity();
    d.Bd = Mat42::Zero();
    d.dt = 0.02;
    FilterState fs;
    fs.x_hat = Vec4(0.1, 0.2, 0.3, 0.4);
    fs.P = Mat4::Identity() * 0.5;
    const FilterState out = kf_predict(fs, d, {}, nm);
    CHECK((out.x_hat - fs.x_hat).norm() == 0.0);
    CHECK((out.P - fs.P).norm() == 0.0);
  }
  SUBCASE("zero prior covariance accumulates the process noise") {
    NoiseModel nmq = scalar_model(0.0, 1.0);
    nmq.Q_proc = Mat4::Identity() * 0.25;
    DiscreteSystem d;
    d.Ad = Mat4::Identity();
    d.Bd = Mat42::Zero();
    d.dt = 0.02;
    FilterState fs;
    fs.P = Mat4::Zero();
    const FilterState out = kf_predict(fs, d, {}, nmq);
    CHECK((out.P - Mat4::Identity() * 0.25).norm() < 1e-15);
  }
  SUBCASE("scalar covariance sum") {
    NoiseModel nmq = scalar_model(0.5, 1.0);
    FilterState fs;
    fs.P = Mat4::Zero();
    fs.P(0, 0) = 1.0;
    const FilterState out = kf_predict(fs, scalar_system(1.0), {}, nmq);
    CHECK(out.P(0, 0) == doctest::Approx(1.5).epsilon(1e-14));
  }
}

TEST_CASE("kf_update") {
  SUBCASE("zero innovation keeps the estimate") {
    const NoiseModel nm = NoiseModel::positions();
    FilterState fs;
    fs.x_hat = Vec4(0.05, 0.1, -0.02, 0.3);
    fs.P = Mat4::Identity() * 0.01;
    const VectorXd y = nm.C * fs.x_hat;
    const FilterState out = kf_update(fs, y, nm);
    CHECK((out.x_hat - fs.x_hat).norm() < 1e-15);
  }
  SUBCASE("scalar gain and covariance") {
    const NoiseModel nm = scalar_model(0.0, 1.0);
    FilterState fs;
    fs.P = Mat4::Zero();
    fs.P(0, 0) = 1.0;
    VectorXd y(1);
    y << 1.0;
    const FilterState out = kf_update(fs, y, nm);
    // K = p/(p+r) = 0.5, p' = (1-K) p = 0.5
    CHECK(out.x_hat[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(out.P(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("huge measurement noise ignores the measurement") {
    const NoiseModel nm = scalar_model(0.0, 1e12);
    FilterState fs;
    fs.P = Mat4::Zero();
    fs.P(0, 0) = 1.0;
    VectorXd y(1);
    y << 5.0;
    const FilterState out = kf_update(fs, y, nm);
    CHECK(std::abs(out.x_hat[0]) < 1e-10);
    CHECK(out.P(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("measurement dimension mismatch throws") {
    const NoiseModel nm = NoiseModel::positions();
    VectorXd y(3);
    y.setZero();
    CHECK_THROWS_AS(kf_update(FilterState{}, y, nm), std::invalid_argument);
  }
}

TEST_CASE("scalar covariance converges to the Riccati fixed point") {
  const double a = 1.0, c = 1.0, q = 0.03, r = 0.02;
  // brute-force fixed-point iteration oracle on the predict/update recursion
  double p_oracle = 1.0;
  for (int i = 0; i < 200000; ++i) {
    const double pp = a * a * p_oracle + q;
    p_oracle = pp - pp * c * c * pp / (c * c * pp + r);
  }
  NoiseModel nm = scalar_model(q, r);
  FilterState fs;
  fs.P = Mat4::Zero();
  fs.P(0, 0) = 1.0;
  const DiscreteSystem d = scalar_system(a);
  VectorXd y(1);
  y << 0.0;
  for (int i = 0; i < 2000; ++i) {
    fs = kf_update(kf_predict(fs, d, {}, nm), y, nm);
  }
  // compare the posterior covariance after one more predict/update cycle
  const FilterState pr = kf_predict(fs, d, {}, nm);
  const FilterState po = kf_update(pr, y, nm);
  CHECK(std::abs(po.P(0, 0) - p_oracle) < 1e-10);
}

TEST_CASE("zero noise and exact initialization track exactly") {
  const ModelParams p;
  const DiscreteSystem d = discretize(build_two_mass_system(p, 6.5), 0.02);
  const NoiseModel nm = NoiseModel::positions();
  PendulumState x{0.01, 0.0, 0.02, 0.0};
  FilterState fs;
  fs.x_hat = x.vec();
  fs.P = Mat4::Zero();
  const ControlInput u{0.005, 0.01};
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    x = step_dynamics(d, x, u);
    fs = kf_predict(fs, d, u, nm);
    fs = kf_update(fs, nm.C * x.vec(), nm);
    worst = std::max(worst, (fs.x_hat - x.vec()).norm());
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("estimates beat raw measurements under noise") {
  const DiscreteSystem d = stable_system();
  const NoiseModel nm = NoiseModel::positions(1e-6, 1e-4, 1e-4);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 1.0);
  const double sigma = 0.01;
  Vec4 x(0.05, 0.0, -0.03, 0.0);
  FilterState fs;
  fs.x_hat = x;
  double err_est = 0.0, err_meas = 0.0;
  double min_eig = 1.0;
  for (int k = 0; k < 2000; ++k) {
    x = d.Ad * x;
    fs = kf_predict(fs, d, {}, nm);
    VectorXd y(2);
    y << x[0] + sigma * n(rng), x[2] + sigma * n(rng);
    fs = kf_update(fs, y, nm);
    err_est += std::pow(fs.x_hat[0] - x[0], 2);
    err_meas += std::pow(y[0] - x[0], 2);
    Eigen::SelfAdjointEigenSolver<Mat4> es(fs.P);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    CHECK(fs.x_hat.allFinite());
    CHECK((fs.P - fs.P.transpose()).norm() < 1e-12);
  }
  CHECK(std::sqrt(err_est / 2000.0) < std::sqrt(err_meas / 2000.0));
  CHECK(min_eig >= -1e-10);
}

TEST_CASE("posterior trace never exceeds prior trace") {
  const NoiseModel nm = NoiseModel::positions();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Mat4 M;
    for (int i = 0; i < 16; ++i) {
      M(i / 4, i % 4) = n(rng);
    }
    FilterState fs;
    fs.P = M * M.transpose();
    VectorXd y(2);
    y << n(rng), n(rng);
    const FilterState out = kf_update(fs, y, nm);
    CHECK(out.P.trace() <= fs.P.trace() + 1e-12);
  }
}

TEST_CASE("NoiseModel validation") {
  NoiseModel nm = NoiseModel::positions();
  CHECK_NOTHROW(nm.validate());
  nm.R_meas(0, 0) = 0.0;
  CHECK_THROWS_AS(nm.validate(), ConfigError);
  nm = NoiseModel::positions();
  nm.Q_proc(0, 0) = -1.0;
  CHECK_THROWS_AS(nm.validate(), ConfigError);
}
