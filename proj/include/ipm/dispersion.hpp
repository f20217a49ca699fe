#pragma once

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "ipm/errors.hpp"

namespace ipm {

enum class Polarization { ordinary, extraordinary };

/// One-pole Sellmeier set, n^2(lambda) = A + B/(lambda^2 - C) - D*lambda^2
/// with lambda in micrometers.
template <typename Scalar = double>
struct SellmeierCoeffs {
  Scalar A{}, B{}, C{}, D{};

  Scalar n_squared(Scalar lambda_um) const {
    const Scalar l2 = lambda_um * lambda_um;
    return A + B / (l2 - C) - D * l2;
  }
  Scalar index(Scalar lambda_um) const { return std::sqrt(n_squared(lambda_um)); }
};

/// Uniaxial crystal dispersion record. Angles in radians, transparency
/// bounds in nanometers. `source` cites the published Sellmeier data.
template <typename Scalar = double>
struct CrystalDef {
  std::string name;
  SellmeierCoeffs<Scalar> sellmeier_o;
  SellmeierCoeffs<Scalar> sellmeier_e;
  Scalar cut_angle{};  // optical axis to face normal at zero rotation
  Scalar transparency_min_nm{};
  Scalar transparency_max_nm{};
  std::string source;

  bool in_transparency(Scalar lambda_nm) const {
    return lambda_nm >= transparency_min_nm && lambda_nm <= transparency_max_nm;
  }
};

using CrystalDefd = CrystalDef<double>;

namespace detail {
template <typename Scalar>
void require_transparent(const CrystalDef<Scalar>& c, Scalar lambda_nm) {
  if (!c.in_transparency(lambda_nm)) {
    std::ostringstream os;
    os << "wavelength " << lambda_nm << " nm outside transparency range ["
       << c.transparency_min_nm << ", " << c.transparency_max_nm << "] nm of "
       << c.name;
    throw DomainError(os.str());
  }
}
}  // namespace detail

/// Ordinary refractive index n_o(lambda), lambda in nanometers.
template <typename Scalar>
Scalar n_ordinary(const CrystalDef<Scalar>& c, Scalar lambda_nm) {
  detail::require_transparent(c, lambda_nm);
  return c.sellmeier_o.index(lambda_nm * Scalar(1e-3));
}

/// Principal extraordinary index n_e(lambda), lambda in nanometers.
template <typename Scalar>
Scalar n_extraordinary_principal(const CrystalDef<Scalar>& c, Scalar lambda_nm) {
  detail::require_transparent(c, lambda_nm);
  return c.sellmeier_e.index(lambda_nm * Scalar(1e-3));
}

/// Extraordinary-wave index for a wavevector at angle phi to the optical
/// axis: [cos^2(phi)/n_o^2 + sin^2(phi)/n_e^2]^(-1/2). Even and pi-periodic
/// in phi; collapses to n_o at phi = 0 and to n_e at phi = pi/2.
template <typename Scalar>
Scalar n_extraordinary_at_angle(const CrystalDef<Scalar>& c, Scalar lambda_nm,
                                Scalar phi) {
  detail::require_transparent(c, lambda_nm);
  const Scalar lambda_um = lambda_nm * Scalar(1e-3);
  const Scalar no2 = c.sellmeier_o.n_squared(lambda_um);
  const Scalar ne2 = c.sellmeier_e.n_squared(lambda_um);
  const Scalar cp = std::cos(phi);
  const Scalar sp = std::sin(phi);
  return Scalar(1) / std::sqrt(cp * cp / no2 + sp * sp / ne2);
}

/// Wavenumber k = 2*pi*n/lambda in rad/um, lambda in nanometers.
template <typename Scalar>
Scalar wavenumber(Scalar lambda_nm, Scalar n) {
  if (!(lambda_nm > Scalar(0))) {
    std::ostringstream os;
    os << "wavenumber requires a positive wavelength, got " << lambda_nm << " nm";
    throw DomainError(os.str());
  }
  return Scalar(2) * std::numbers::pi_v<Scalar> * n / (lambda_nm * Scalar(1e-3));
}

/// A forward-propagating ray in the internal frame.
template <typename Scalar = double>
struct OpticalRay {
  Scalar wavelength_nm{};
  Polarization polarization{Polarization::ordinary};
  Scalar theta{};  // signed in-plane angle to z, |theta| < pi/2
  Scalar beta{};   // signed out-of-plane angle, |beta| < pi/2
};

}  // namespace ipm
