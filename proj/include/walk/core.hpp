#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace walk {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Mat42 = Eigen::Matrix<double, 4, 2>;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Which leg a footstep or support phase belongs to.
enum class Side { Left, Right };

inline Side opposite(Side s) { return s == Side::Left ? Side::Right : Side::Left; }
inline const char* to_string(Side s) { return s == Side::Left ? "left" : "right"; }
inline double side_sign(Side s) { return s == Side::Left ? 1.0 : -1.0; }

/// Invalid configuration value or unparseable configuration file.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An iterative solver ran out of iterations or produced an unstable result.
struct NoConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A matrix or configuration that must be invertible is numerically singular.
struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace walk
