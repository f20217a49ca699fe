#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ipm/angles.hpp"
#include "ipm/dispersion.hpp"
#include "ipm/errors.hpp"
#include "ipm/pmcore.hpp"

namespace ipm {

enum class RotationMode {
  normal_incidence,  // pump 4 along the face normal (the solving frame)
  tilted             // crystal rotated about x so the external pump
                     // separation stays fixed while alpha varies
};

struct LabConfig {
  double screen_distance_mm{100.0};  // exit face to screen, along pump 4
  RotationMode mode{RotationMode::normal_incidence};
};

/// Position of one field on the screen, plus the sweep context that
/// produced it (CSV row layout).
struct ScreenSpot {
  double x_mm{}, y_mm{};
  double lambda_nm{};
  int field{};  // 1..5
  Branch branch{};
  double alpha_deg{};
  double lambda1_nm{};
  double theta_ext_deg{}, beta_ext_deg{};
};

template <typename Scalar = double>
struct ExitAngles {
  Scalar beta{}, theta{};
};

/// Exit-face refraction: sin(beta_out) = n sin(beta) and
/// sin(theta_out) = n cos(beta) sin(theta) / sqrt(1 - n^2 sin^2(beta)).
/// Signs of beta and theta are preserved. Throws TotalInternalReflection
/// (message includes `label`) when either output sine leaves [-1, 1].
template <typename Scalar>
ExitAngles<Scalar> refract_out(Scalar n, Scalar beta, Scalar theta,
                               const std::string& label = {}) {
  using std::abs, std::asin, std::cos, std::sin, std::sqrt;
  const Scalar sb = n * sin(beta);
  if (abs(sb) > Scalar(1)) {
    std::ostringstream os;
    os << "total internal reflection" << (label.empty() ? "" : " for " + label)
       << ": |n sin(beta)| = " << abs(sb) << " > 1";
    throw TotalInternalReflection(os.str(), static_cast<double>(sb));
  }
  const Scalar st = n / sqrt(Scalar(1) - sb * sb) * cos(beta) * sin(theta);
  if (abs(st) > Scalar(1)) {
    std::ostringstream os;
    os << "total internal reflection" << (label.empty() ? "" : " for " + label)
       << ": |sin(theta_out)| = " << abs(st) << " > 1";
    throw TotalInternalReflection(os.str(), static_cast<double>(st));
  }
  return {asin(sb), asin(st)};
}

/// Entrance refraction of an in-plane ordinary ray (planar Snell).
template <typename Scalar>
Scalar refract_in_ordinary(Scalar n, Scalar theta_ext) {
  return std::asin(std::sin(theta_ext) / n);
}

template <typename Scalar = double>
struct Pump4Refraction {
  Scalar theta_int{};  // internal angle to the face normal
  Scalar alpha{};      // resulting tuning angle
  Scalar n4{};         // extraordinary index at alpha
};

/// Self-consistent entrance refraction of the extraordinary pump at a
/// tilted face: sin(incidence) = n4(lambda4, alpha) sin(theta_int) with
/// alpha = oa_to_normal - theta_int, solved by fixed-point iteration to
/// |delta theta_int| < 1e-12 rad. Optionally records the iterates.
template <typename Scalar>
Pump4Refraction<Scalar> refract_in_pump4(const CrystalDef<Scalar>& crystal,
                                         Scalar lambda4_nm, Scalar incidence,
                                         Scalar oa_to_normal,
                                         std::vector<Scalar>* iterates = nullptr) {
  Scalar theta = Scalar(0);
  Scalar n4 = n_extraordinary_at_angle(crystal, lambda4_nm, oa_to_normal);
  for (int i = 0; i < 100; ++i) {
    n4 = n_extraordinary_at_angle(crystal, lambda4_nm, oa_to_normal - theta);
    const Scalar next = std::asin(std::sin(incidence) / n4);
    if (iterates) iterates->push_back(next);
    const bool done = std::abs(next - theta) < Scalar(1e-12);
    theta = next;
    if (done)
      return {theta, oa_to_normal - theta,
              n_extraordinary_at_angle(crystal, lambda4_nm, oa_to_normal - theta)};
  }
  std::ostringstream os;
  os << "pump-4 entrance refraction did not converge for incidence "
     << rad_to_deg(incidence) << " deg";
  throw DomainError(os.str());
}

/// Crystal rotation (external pump-4 incidence) that realizes a given
/// tuning angle: the inverse of refract_in_pump4.
template <typename Scalar>
Scalar pump4_rotation_for_alpha(const CrystalDef<Scalar>& crystal,
                                Scalar lambda4_nm, Scalar alpha) {
  const Scalar theta_int = crystal.cut_angle - alpha;
  const Scalar n4 = n_extraordinary_at_angle(crystal, lambda4_nm, alpha);
  const Scalar s = n4 * std::sin(theta_int);
  if (std::abs(s) > Scalar(1)) {
    std::ostringstream os;
    os << "tuning angle " << rad_to_deg(alpha)
       << " deg is not reachable by rotating the crystal (|n4 sin(cut - "
          "alpha)| = "
       << std::abs(s) << " > 1)";
    throw DomainError(os.str());
  }
  return std::asin(s);
}

/// Intersection of an external ray with a screen normal to pump 4 at
/// distance D: x = D tan(beta)/cos(theta), y = D tan(theta). Pump 4 maps to
/// the origin.
inline ScreenSpot project_to_screen(double beta_out, double theta_out,
                                    const LabConfig& cfg, double lambda_nm,
                                    int field, Branch branch) {
  ScreenSpot s;
  s.x_mm = cfg.screen_distance_mm * std::tan(beta_out) / std::cos(theta_out);
  s.y_mm = cfg.screen_distance_mm * std::tan(theta_out);
  s.lambda_nm = lambda_nm;
  s.field = field;
  s.branch = branch;
  s.beta_ext_deg = rad_to_deg(beta_out);
  s.theta_ext_deg = rad_to_deg(theta_out);
  return s;
}

template <typename Scalar = double>
struct FieldExternal {
  int field{};
  Scalar lambda_nm{};
  Scalar beta_ext{}, theta_ext{};  // lab frame, relative to external pump 4
};

/// External lab-frame directions of the generated fields 1, 2 and 3 of a
/// solution. Fields 1 and 3 leave with the ordinary index, field 2 with the
/// angle-dependent extraordinary index at its own phi. In tilted mode the
/// exit face is rotated by the pump-4 internal angle (cut - alpha); internal
/// angles are shifted into the face frame before refraction and the external
/// directions rotated back by the crystal rotation, so pump 4 stays at the
/// lab origin.
template <typename Scalar>
std::array<FieldExternal<Scalar>, 3> solution_externals(
    const CrystalDef<Scalar>& crystal, const PMSolution<Scalar>& s,
    RotationMode mode) {
  Scalar t4 = Scalar(0), rho = Scalar(0);
  if (mode == RotationMode::tilted) {
    t4 = crystal.cut_angle - s.alpha;
    rho = pump4_rotation_for_alpha(crystal, s.lambda4_nm(), s.alpha);
  }
  const Scalar n1 = n_ordinary(crystal, s.lambda1_nm);
  const Scalar n3 = n_ordinary(crystal, s.lambda3_nm);
  const Scalar n2 = n_extraordinary_at_angle(crystal, s.lambda2_nm, s.phi);

  auto one = [&](int field, Scalar lambda, Scalar n, Scalar beta, Scalar theta) {
    const auto ext =
        refract_out(n, beta, theta + t4, "field " + std::to_string(field));
    return FieldExternal<Scalar>{field, lambda, ext.beta, ext.theta - rho};
  };
  return {one(1, s.lambda1_nm, n1, s.beta1, s.theta1),
          one(2, s.lambda2_nm, n2, s.beta2, s.theta2),
          one(3, s.lambda3_nm, n3, s.beta3, s.theta3)};
}

}  // namespace ipm
