#include "walk/dynamics.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

namespace walk {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(std::string(name) + " must be positive and finite");
  }
}

}  // namespace

void ModelParams::validate() const {
  require_positive(m_c, "m_c");
  if (!(m_to >= 0.0) || !std::isfinite(m_to)) {
    throw ConfigError("m_to must be non-negative");
  }
  require_positive(l, "l");
  require_positive(z_c, "z_c");
  require_positive(z_to, "z_to");
  if (!(A_z >= 0.0) || !std::isfinite(A_z)) {
    throw ConfigError("A_z must be non-negative");
  }
  if (!(A_z < z_c)) {
    throw ConfigError("A_z must be smaller than z_c");
  }
  require_positive(g, "g");
  require_positive(step_time, "step_time");
  if (!std::isfinite(phi)) {
    throw ConfigError("phi must be finite");
  }
}

double natural_frequency(double z, double zdd, double g) {
  if (!(z > 0.0)) {
    throw std::domain_error("natural_frequency: height must be positive");
  }
  const double a = g + zdd;
  if (a < 0.0) {
    throw std::domain_error(
        "natural_frequency: net vertical acceleration g + zdd is negative");
  }
  return std::sqrt(a / z);
}

double com_height(double t, const ModelParams& p) {
  if (!(p.step_time > 0.0)) {
    throw ConfigError("com_height: step_time must be positive");
  }
  const double w = 2.0 * std::numbers::pi / p.step_time;
  return p.z_c + p.A_z * std::cos(w * t + p.phi);
}

double com_height_accel(double t, const ModelParams& p) {
  if (!(p.step_time > 0.0)) {
    throw ConfigError("com_height_accel: step_time must be positive");
  }
  const double w = 2.0 * std::numbers::pi / p.step_time;
  return -p.A_z * w * w * std::cos(w * t + p.phi);
}

double lipm_accel(double x_c, double p_x, double omega) {
  return omega * omega * (x_c - p_x);
}

double zmp_multibody(std::span<const double> masses, std::span<const double> x,
                     std::span<const double> z, std::span<const double> xdd,
                     std::span<const double> zdd, double g) {
  const std::size_t n = masses.size();
  if (n == 0 || x.size() != n || z.size() != n || xdd.size() != n ||
      zdd.size() != n) {
    throw std::invalid_argument("zmp_multibody: lists must share one length >= 1");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double f = masses[k] * (zdd[k] + g);
    num += x[k] * f - masses[k] * z[k] * xdd[k];
    den += f;
  }
  if (den == 0.0) {
    throw SingularityError("zmp_multibody: zero net vertical force");
  }
  return num / den;
}

LinearSystem build_two_mass_system(const ModelParams& p, double omega) {
  LinearSystem s;
  s.alpha = p.m_to / p.m_c;
  s.beta = p.z_to / p.z_c;
  s.mu = (1.0 + s.alpha) / (1.0 + s.alpha * s.beta) * omega * omega;
  s.omega = omega;

  s.A.setZero();
  s.A(0, 1) = 1.0;
  s.A(1, 0) = s.mu;
  s.A(1, 2) = s.mu * s.alpha * p.l / (1.0 + s.alpha);
  s.A(2, 3) = 1.0;

  s.B.setZero();
  s.B(1, 0) = -s.mu;
  s.B(1, 1) = -s.alpha * s.beta * p.l / (1.0 + s.alpha * s.beta);
  s.B(3, 1) = 1.0;
  return s;
}

std::pair<MatrixXd, MatrixXd> discretize(const MatrixXd& A, const MatrixXd& B,
                                         double dt) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("discretize: dt must be positive");
  }
  const auto n = A.rows();
  const auto m = B.cols();
  // M = [A B; 0 0], exp(M dt) = [Ad Bd; 0 I]
  MatrixXd M = MatrixXd::Zero(n + m, n + m);
  M.topLeftCorner(n, n) = A;
  M.topRightCorner(n, m) = B;
  const MatrixXd E = (M * dt).exp();
  return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

DiscreteSystem discretize(const LinearSystem& sys, double dt) {
  auto [Ad, Bd] = discretize(MatrixXd(sys.A), MatrixXd(sys.B), dt);
  DiscreteSystem d;
  d.Ad = Ad;
  d.Bd = Bd;
  d.dt = dt;
  return d;
}

PendulumState step_dynamics(const DiscreteSystem& d, const PendulumState& x,
                            const ControlInput& u) {
  return PendulumState::from(d.Ad * x.vec() + d.Bd * u.vec());
}

}  // namespace walk
