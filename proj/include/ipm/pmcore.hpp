#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "ipm/angles.hpp"
#include "ipm/dispersion.hpp"
#include "ipm/errors.hpp"

namespace ipm {

enum class RootBranch : std::uint8_t { plus, minus };
enum class MirrorBranch : std::uint8_t { up, down };

struct Branch {
  RootBranch root{RootBranch::plus};
  MirrorBranch mirror{MirrorBranch::up};
};

inline const char* to_string(RootBranch r) {
  return r == RootBranch::plus ? "plus" : "minus";
}
inline const char* to_string(MirrorBranch m) {
  return m == MirrorBranch::up ? "up" : "down";
}

/// Fixed pump configuration plus the free spectral parameter lambda1.
/// theta5 is the internal in-plane angle of pump 5 to pump 4; alpha is the
/// angle of the pump-4 wavevector to the optical axis. Pump 4 propagates
/// along z; beta5 = beta4 = theta4 = 0.
template <typename Scalar = double>
struct PMQuery {
  CrystalDef<Scalar> crystal;
  Scalar lambda4_nm{};
  Scalar lambda5_nm{};
  Scalar alpha{};
  Scalar theta5{};
  Scalar lambda1_nm{};
};

/// Full 11-variable solution of the interlinked phase-matching system with
/// branch tags and verified residuals (the six conditions, each divided by
/// k4). Wavenumbers in rad/um.
template <typename Scalar = double>
struct PMSolution {
  Scalar lambda1_nm{}, lambda2_nm{}, lambda3_nm{};
  Scalar theta1{}, theta2{}, theta3{}, theta5{};
  Scalar beta1{}, beta2{}, beta3{};
  Scalar alpha{};
  Scalar k1{}, k2{}, k3{}, k4{}, k5{};
  Scalar phi{};  // angle of k2 to the optical axis
  Branch branch{};
  Eigen::Matrix<Scalar, 6, 1> residual = Eigen::Matrix<Scalar, 6, 1>::Zero();
  bool grazing{false};  // |beta3| > 60 deg

  Scalar max_residual() const { return residual.template lpNorm<Eigen::Infinity>(); }
  /// Pump wavelengths recovered from energy matching.
  Scalar lambda4_nm() const { return Scalar(1) / (Scalar(1) / lambda1_nm + Scalar(1) / lambda3_nm); }
  Scalar lambda5_nm() const { return Scalar(1) / (Scalar(1) / lambda2_nm - Scalar(1) / lambda3_nm); }
};

using PMSolutiond = PMSolution<double>;
using PMQueryd = PMQuery<double>;

/// Why an empty solution list came back empty.
struct SolveDiagnostics {
  bool degenerate_configuration = false;  // a = b = 0, nothing to solve
  bool no_real_roots = false;             // negative discriminant
  int domain_rejected = 0;                // back-substitution left its domain
  int residual_rejected = 0;              // residual check above tolerance
  int accepted = 0;

  std::string summary() const {
    std::ostringstream os;
    if (degenerate_configuration) os << "degenerate configuration; ";
    if (no_real_roots) os << "no real roots; ";
    os << "domain_rejected=" << domain_rejected
       << " residual_rejected=" << residual_rejected << " accepted=" << accepted;
    return os.str();
  }
};

template <typename Scalar = double>
struct SolveResult {
  std::vector<PMSolution<Scalar>> solutions;
  SolveDiagnostics diagnostics;
};

/// Scalars shared by the coefficient block and the back-substitution chain.
/// G2 and L2 are in (rad/um)^-2, so near unity for visible wavelengths.
template <typename Scalar = double>
struct PMDerived {
  Scalar lambda2_nm{}, lambda3_nm{};
  Scalar k1{}, k3{}, k4{}, k5{};
  Scalar A{};   // (k4^2 + k3^2 - k1^2) / (2 k3 k4)
  Scalar G2{};  // 1/k2o^2 - 1/k2e^2  (negative for a negative uniaxial crystal)
  Scalar L2{};  // 1/k2e^2
};

template <typename Scalar = double>
struct QuadraticCoeffs {
  Scalar a{}, b{}, c{};
};

/// Residual tolerance (relative to k4) below which a candidate is accepted.
inline constexpr double kResidualTolerance = 1e-10;

namespace detail {

template <typename Scalar>
void require_valid_query(const PMQuery<Scalar>& q) {
  if (!(Scalar(1) / q.lambda4_nm > Scalar(1) / q.lambda1_nm)) {
    std::ostringstream os;
    os << "query requires 1/lambda4 > 1/lambda1 (lambda4=" << q.lambda4_nm
       << " nm, lambda1=" << q.lambda1_nm << " nm)";
    throw DomainError(os.str());
  }
}

}  // namespace detail

/// Derived wavelengths (energy matching, exact by construction), wavenumbers
/// and the A, G2, L2 scalars for a query. Throws DomainError if any of the
/// five wavelengths leaves the crystal transparency range.
template <typename Scalar>
PMDerived<Scalar> derive_quantities(const PMQuery<Scalar>& q) {
  detail::require_valid_query(q);
  PMDerived<Scalar> d;
  d.lambda3_nm = Scalar(1) / (Scalar(1) / q.lambda4_nm - Scalar(1) / q.lambda1_nm);
  d.lambda2_nm = Scalar(1) / (Scalar(1) / d.lambda3_nm + Scalar(1) / q.lambda5_nm);
  d.k1 = wavenumber(q.lambda1_nm, n_ordinary(q.crystal, q.lambda1_nm));
  d.k3 = wavenumber(d.lambda3_nm, n_ordinary(q.crystal, d.lambda3_nm));
  d.k5 = wavenumber(q.lambda5_nm, n_ordinary(q.crystal, q.lambda5_nm));
  d.k4 = wavenumber(q.lambda4_nm,
                    n_extraordinary_at_angle(q.crystal, q.lambda4_nm, q.alpha));
  const Scalar k2o = wavenumber(d.lambda2_nm, n_ordinary(q.crystal, d.lambda2_nm));
  const Scalar k2e =
      wavenumber(d.lambda2_nm, n_extraordinary_principal(q.crystal, d.lambda2_nm));
  d.G2 = Scalar(1) / (k2o * k2o) - Scalar(1) / (k2e * k2e);
  d.L2 = Scalar(1) / (k2e * k2e);
  d.A = (d.k4 * d.k4 + d.k3 * d.k3 - d.k1 * d.k1) / (Scalar(2) * d.k3 * d.k4);
  return d;
}

/// Coefficients of the quadratic a*tan^2(theta3) + b*tan(theta3) + c = 0
/// that closes the interlinked system. a vanishes at alpha = 0 and b also
/// vanishes when additionally theta5 = 0.
template <typename Scalar>
QuadraticCoeffs<Scalar> quadratic_coefficients(const PMQuery<Scalar>& q,
                                               const PMDerived<Scalar>& d) {
  using std::cos, std::sin;
  const Scalar s5 = sin(q.theta5), c5 = cos(q.theta5);
  const Scalar sa = sin(q.alpha), ca = cos(q.alpha);
  const Scalar Ak3 = d.A * d.k3;
  const Scalar v = Ak3 + d.k5 * c5;
  QuadraticCoeffs<Scalar> qc;
  qc.a = d.G2 * d.A * d.A * d.k3 * d.k3 * sa * sa;
  qc.b = Scalar(2) * d.G2 * Ak3 * v * sa * ca +
         Scalar(2) * d.G2 * Ak3 * d.k5 * s5 * sa * sa +
         Scalar(2) * d.L2 * Ak3 * d.k5 * s5;
  qc.c = d.G2 * v * v * (ca * ca - sa * sa) +
         Scalar(2) * d.G2 * d.k5 * s5 * v * sa * ca +
         d.G2 * (Ak3 * Ak3 + d.k5 * d.k5 + Scalar(2) * Ak3 * d.k5 * c5) * sa * sa +
         d.L2 * (d.k3 * d.k3 + d.k5 * d.k5 + Scalar(2) * Ak3 * d.k5 * c5) - Scalar(1);
  return qc;
}

/// Six phase-matching residuals (each left-minus-right divided by k4) for a
/// candidate solution, evaluated from first principles: wavenumbers come
/// from the dispersion model and k2 from the index at the candidate's own
/// phi. Pure; used both inside solve_interlinked and standalone in tests.
template <typename Scalar>
Eigen::Matrix<Scalar, 6, 1> verify_pm(const PMSolution<Scalar>& s,
                                      const PMQuery<Scalar>& q) {
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  const PMDerived<Scalar> d = derive_quantities(q);
  const Scalar cphi = std::cos(s.beta2) * std::cos(s.theta2 - q.alpha);
  const Scalar phi = std::acos(std::clamp(cphi, Scalar(-1), Scalar(1)));
  const Scalar k2 =
      wavenumber(d.lambda2_nm, n_extraordinary_at_angle(q.crystal, d.lambda2_nm, phi));

  const Vec3 u1 = direction(s.beta1, s.theta1);
  const Vec3 u2 = direction(s.beta2, s.theta2);
  const Vec3 u3 = direction(s.beta3, s.theta3);
  const Vec3 u5 = direction(Scalar(0), q.theta5);
  const Vec3 k4vec{Scalar(0), Scalar(0), d.k4};

  Eigen::Matrix<Scalar, 6, 1> r;
  r.template head<3>() = (d.k1 * u1 + d.k3 * u3 - k4vec) / d.k4;
  r.template tail<3>() = (k2 * u2 - d.k3 * u3 - d.k5 * u5) / d.k4;
  return r;
}

/// Analytic solution of the interlinked phase-matching system. Solves the
/// closing quadratic for tan(theta3) with the numerically stable root form,
/// back-substitutes both roots and both beta-mirror signs, keeps only
/// candidates whose intermediates stay in-domain and whose full residual
/// against the six original conditions is below kResidualTolerance.
/// Returned solutions are ordered root plus before minus, mirror up before
/// down; an exactly planar solution (beta3 = 0) appears once, tagged up.
template <typename Scalar>
SolveResult<Scalar> solve_interlinked(const PMQuery<Scalar>& q) {
  using std::abs, std::sqrt, std::sin, std::cos, std::atan, std::asin, std::acos;
  SolveResult<Scalar> out;
  const PMDerived<Scalar> d = derive_quantities(q);
  const QuadraticCoeffs<Scalar> qc = quadratic_coefficients(q, d);

  // roots of a t^2 + b t + c = 0, stable against cancellation
  std::vector<std::pair<RootBranch, Scalar>> roots;
  if (qc.a == Scalar(0)) {
    if (qc.b == Scalar(0)) {
      out.diagnostics.degenerate_configuration = true;
      return out;
    }
    roots.emplace_back(qc.b > Scalar(0) ? RootBranch::plus : RootBranch::minus,
                       -qc.c / qc.b);
  } else {
    const Scalar disc = qc.b * qc.b - Scalar(4) * qc.a * qc.c;
    if (disc < Scalar(0)) {
      out.diagnostics.no_real_roots = true;
      return out;
    }
    const Scalar sq = sqrt(disc);
    const Scalar qq = -(qc.b + std::copysign(sq, qc.b)) / Scalar(2);
    if (qq == Scalar(0)) {
      // b = 0 and disc = 0: double root at the origin
      roots.emplace_back(RootBranch::plus, Scalar(0));
    } else if (disc == Scalar(0)) {
      roots.emplace_back(RootBranch::plus, qq / qc.a);
    } else if (qc.b >= Scalar(0)) {
      roots.emplace_back(RootBranch::minus, qq / qc.a);
      roots.emplace_back(RootBranch::plus, qc.c / qq);
    } else {
      roots.emplace_back(RootBranch::plus, qq / qc.a);
      roots.emplace_back(RootBranch::minus, qc.c / qq);
    }
  }

  const Scalar s5 = sin(q.theta5), c5 = cos(q.theta5);
  for (const auto& [root_tag, t] : roots) {
    const Scalar theta3 = atan(t);
    const Scalar cos_t3 = cos(theta3);
    Scalar cb3 = d.A / cos_t3;
    if (!(cb3 > Scalar(0)) || cb3 > Scalar(1) + Scalar(1e-12)) {
      ++out.diagnostics.domain_rejected;
      continue;
    }
    cb3 = std::min(cb3, Scalar(1));
    const Scalar beta3_mag = acos(cb3);
    const bool planar = beta3_mag == Scalar(0);

    for (MirrorBranch mirror : {MirrorBranch::up, MirrorBranch::down}) {
      if (planar && mirror == MirrorBranch::down) continue;  // up == down
      const Scalar beta3 = mirror == MirrorBranch::up ? beta3_mag : -beta3_mag;
      const Scalar sb3 = sin(beta3);

      const Scalar sb1 = -(d.k3 / d.k1) * sb3;
      if (abs(sb1) > Scalar(1)) {
        ++out.diagnostics.domain_rejected;
        continue;
      }
      const Scalar beta1 = asin(sb1);
      const Scalar k1cb1 = sqrt(d.k1 * d.k1 - d.k3 * d.k3 * sb3 * sb3);
      const Scalar st1 = -d.k3 * d.A * t / k1cb1;
      if (abs(st1) > Scalar(1)) {
        ++out.diagnostics.domain_rejected;
        continue;
      }
      const Scalar theta1 = asin(st1);

      // theta2 from the ratio form, recovered with the two-argument
      // arctangent of (numerator, denominator)
      const Scalar Ak3 = d.A * d.k3;
      const Scalar num2 = Ak3 * t + d.k5 * s5;
      const Scalar den2 = Ak3 + d.k5 * c5;
      const Scalar theta2 = std::atan2(num2, den2);

      const Scalar cross = Scalar(2) * d.k3 * d.k5 * d.A * (t * s5 + c5);
      const Scalar k2sq = d.k3 * d.k3 + d.k5 * d.k5 + cross;            // |k3+k5|^2
      const Scalar k2sq_cb2 = Ak3 * Ak3 * (Scalar(1) + t * t) + d.k5 * d.k5 + cross;
      const Scalar cos2b2 = k2sq_cb2 / k2sq;
      if (!(cos2b2 >= Scalar(0)) || cos2b2 > Scalar(1) + Scalar(1e-12)) {
        ++out.diagnostics.domain_rejected;
        continue;
      }
      const Scalar rhs14 = (Scalar(1) - d.L2 * k2sq) / (d.G2 * k2sq_cb2);
      if (rhs14 < -Scalar(1e-12) || rhs14 > Scalar(1) + Scalar(1e-12)) {
        ++out.diagnostics.domain_rejected;
        continue;
      }
      const Scalar beta2 =
          std::copysign(acos(std::min(sqrt(cos2b2), Scalar(1))), beta3);

      PMSolution<Scalar> s;
      s.lambda1_nm = q.lambda1_nm;
      s.lambda2_nm = d.lambda2_nm;
      s.lambda3_nm = d.lambda3_nm;
      s.theta1 = theta1;
      s.theta2 = theta2;
      s.theta3 = theta3;
      s.theta5 = q.theta5;
      s.beta1 = beta1;
      s.beta2 = beta2;
      s.beta3 = beta3;
      s.alpha = q.alpha;
      const Scalar cphi = cos(beta2) * cos(theta2 - q.alpha);
      s.phi = acos(std::clamp(cphi, Scalar(-1), Scalar(1)));
      s.k1 = d.k1;
      s.k2 = wavenumber(d.lambda2_nm,
                        n_extraordinary_at_angle(q.crystal, d.lambda2_nm, s.phi));
      s.k3 = d.k3;
      s.k4 = d.k4;
      s.k5 = d.k5;
      s.branch = Branch{root_tag, mirror};
      s.residual = verify_pm(s, q);
      s.grazing = abs(beta3) > deg_to_rad(Scalar(60));
      if (s.max_residual() >= Scalar(kResidualTolerance)) {
        ++out.diagnostics.residual_rejected;
        continue;
      }
      out.solutions.push_back(std::move(s));
    }
  }

  auto key = [](const PMSolution<Scalar>& s) {
    return (s.branch.root == RootBranch::plus ? 0 : 2) +
           (s.branch.mirror == MirrorBranch::up ? 0 : 1);
  };
  std::sort(out.solutions.begin(), out.solutions.end(),
            [&](const auto& x, const auto& y) { return key(x) < key(y); });
  // coincident roots (discriminant ~ 0) collapse to one entry
  auto near = [](const PMSolution<Scalar>& x, const PMSolution<Scalar>& y) {
    return std::abs(x.theta3 - y.theta3) < Scalar(1e-9) &&
           std::abs(x.beta3 - y.beta3) < Scalar(1e-9);
  };
  for (std::size_t i = 0; i < out.solutions.size(); ++i)
    for (std::size_t j = out.solutions.size(); j-- > i + 1;)
      if (near(out.solutions[i], out.solutions[j]))
        out.solutions.erase(out.solutions.begin() +
                            static_cast<std::ptrdiff_t>(j));
  out.diagnostics.accepted = static_cast<int>(out.solutions.size());
  return out;
}

/// One point of the single-process downconversion cone, parametrized by the
/// azimuth psi around pump 4.
template <typename Scalar = double>
struct ConePoint {
  Scalar psi{};
  Scalar theta1{}, beta1{};
  Scalar theta3{}, beta3{};
};

template <typename Scalar = double>
struct ConeResult {
  std::vector<ConePoint<Scalar>> points;
  bool infeasible = false;
  Scalar cos_half_angle{};  // (k4^2 + k1^2 - k3^2) / (2 k1 k4)
  Scalar half_angle{};      // internal, between k1 and k4

  std::string diagnostic() const {
    std::ostringstream os;
    os << "cone infeasible: |cos(theta_c)| = " << std::abs(cos_half_angle) << " > 1";
    return os.str();
  }
};

/// Directions of fields 1 and 3 satisfying the downconversion-only
/// subsystem for `samples` azimuths psi in [0, 2*pi).
template <typename Scalar>
ConeResult<Scalar> downconversion_cone(const CrystalDef<Scalar>& crystal,
                                       Scalar lambda4_nm, Scalar alpha,
                                       Scalar lambda1_nm, int samples) {
  using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
  ConeResult<Scalar> out;
  const Scalar lambda3_nm =
      Scalar(1) / (Scalar(1) / lambda4_nm - Scalar(1) / lambda1_nm);
  const Scalar k1 = wavenumber(lambda1_nm, n_ordinary(crystal, lambda1_nm));
  const Scalar k3 = wavenumber(lambda3_nm, n_ordinary(crystal, lambda3_nm));
  const Scalar k4 =
      wavenumber(lambda4_nm, n_extraordinary_at_angle(crystal, lambda4_nm, alpha));
  out.cos_half_angle = (k4 * k4 + k1 * k1 - k3 * k3) / (Scalar(2) * k1 * k4);
  if (std::abs(out.cos_half_angle) > Scalar(1)) {
    out.infeasible = true;
    return out;
  }
  out.half_angle = std::acos(out.cos_half_angle);
  const Scalar st = std::sin(out.half_angle), ct = out.cos_half_angle;
  out.points.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const Scalar psi =
        Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(i) / Scalar(samples);
    const Vec3 u1{st * std::sin(psi), st * std::cos(psi), ct};
    const Vec3 K3 = Vec3{Scalar(0), Scalar(0), k4} - k1 * u1;
    ConePoint<Scalar> p;
    p.psi = psi;
    p.beta1 = std::asin(u1.x());
    p.theta1 = std::atan2(u1.y(), u1.z());
    p.beta3 = std::asin(K3.x() / k3);
    p.theta3 = std::atan2(K3.y(), K3.z());
    out.points.push_back(p);
  }
  return out;
}

}  // namespace ipm
