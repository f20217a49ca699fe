#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numbers>

namespace ipm {

template <typename Scalar>
constexpr Scalar deg_to_rad(Scalar deg) {
  return deg * std::numbers::pi_v<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar rad_to_deg(Scalar rad) {
  return rad * Scalar(180) / std::numbers::pi_v<Scalar>;
}

/// Unit propagation vector from the in-plane angle theta (to z, on the
/// (y,z)-plane) and the out-of-plane angle beta (to the (y,z)-plane).
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> direction(Scalar beta, Scalar theta) {
  using std::cos, std::sin;
  return {sin(beta), cos(beta) * sin(theta), cos(beta) * cos(theta)};
}

/// Out-of-plane angle of a (not necessarily unit) forward vector.
template <typename Scalar>
Scalar beta_of(const Eigen::Matrix<Scalar, 3, 1>& v) {
  return std::asin(v.x() / v.norm());
}

/// In-plane angle of a (not necessarily unit) forward vector.
template <typename Scalar>
Scalar theta_of(const Eigen::Matrix<Scalar, 3, 1>& v) {
  return std::atan2(v.y(), v.z());
}

}  // namespace ipm
