#pragma once

// Shared helpers for the unit and acceptance suites: the shipped crystal
// database, the seeded-configuration query and the brute-force oracle that
// cross-checks the analytic solver. The oracle never touches the closing
// quadratic or its back-substitution chain; it scans the (theta3, beta3)
// plane for zeros of the two closure gaps (|k4 z - k3 u3| vs k1 and the
// index-required k2 vs |k3 u3 + k5 u5|).

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ipm/angles.hpp"
#include "ipm/crystal_db.hpp"
#include "ipm/geometry.hpp"
#include "ipm/pmcore.hpp"

namespace ipm_test {

inline const ipm::CrystalDefd& bbo() {
  static const ipm::CrystalDefd crystal = [] {
    const auto db = ipm::load_crystal_db(std::string(IPM_SOURCE_DIR) +
                                         "/data/crystals.json");
    return db.at("BBO");
  }();
  return crystal;
}

constexpr double kLambda4 = 349.0;
constexpr double kLambda5 = 1047.0;
constexpr double kTheta5ExtDeg = -34.8;

/// Internal pump-5 angle for the normal-incidence seeded configuration.
inline double theta5_internal(const ipm::CrystalDefd& c = bbo()) {
  return ipm::refract_in_ordinary(ipm::n_ordinary(c, kLambda5),
                                  ipm::deg_to_rad(kTheta5ExtDeg));
}

inline ipm::PMQueryd seeded_query(double alpha_deg, double lambda1_nm = 632.8) {
  return {bbo(), kLambda4, kLambda5, ipm::deg_to_rad(alpha_deg),
          theta5_internal(), lambda1_nm};
}

// ---------------------------------------------------------------------------
// brute-force oracle

struct OracleSolution {
  double theta3{}, beta3{};  // beta3 >= 0 representative
};

namespace detail {

struct ClosureContext {
  double k1, k3, k4, k5, theta5, alpha, lambda2;
  const ipm::CrystalDefd* crystal;
};

inline ClosureContext closure_context(const ipm::PMQueryd& q) {
  const double lambda3 = 1.0 / (1.0 / q.lambda4_nm - 1.0 / q.lambda1_nm);
  const double lambda2 = 1.0 / (1.0 / lambda3 + 1.0 / q.lambda5_nm);
  return {ipm::wavenumber(q.lambda1_nm, ipm::n_ordinary(q.crystal, q.lambda1_nm)),
          ipm::wavenumber(lambda3, ipm::n_ordinary(q.crystal, lambda3)),
          ipm::wavenumber(q.lambda4_nm, ipm::n_extraordinary_at_angle(
                                            q.crystal, q.lambda4_nm, q.alpha)),
          ipm::wavenumber(q.lambda5_nm, ipm::n_ordinary(q.crystal, q.lambda5_nm)),
          q.theta5,
          q.alpha,
          lambda2,
          &q.crystal};
}

/// Two closure gaps, each relative to k4. Both vanish exactly at a solution.
inline Eigen::Vector2d closure_gaps(const ClosureContext& c, double theta3,
                                    double beta3) {
  const Eigen::Vector3d u3 = ipm::direction(beta3, theta3);
  const Eigen::Vector3d K1 = Eigen::Vector3d(0, 0, c.k4) - c.k3 * u3;
  const Eigen::Vector3d K2 =
      c.k3 * u3 + c.k5 * ipm::direction(0.0, c.theta5);
  const double beta2 = ipm::beta_of(K2);
  const double theta2 = ipm::theta_of(K2);
  const double cphi = std::cos(beta2) * std::cos(theta2 - c.alpha);
  const double phi = std::acos(std::clamp(cphi, -1.0, 1.0));
  const double k2req = ipm::wavenumber(
      c.lambda2, ipm::n_extraordinary_at_angle(*c.crystal, c.lambda2, phi));
  return {(c.k1 - K1.norm()) / c.k4, (k2req - K2.norm()) / c.k4};
}

inline std::optional<Eigen::Vector2d> newton_refine(const ClosureContext& c,
                                                    Eigen::Vector2d x) {
  for (int it = 0; it < 80; ++it) {
    const Eigen::Vector2d g = closure_gaps(c, x[0], x[1]);
    if (g.lpNorm<Eigen::Infinity>() < 1e-12) return x;
    const double h = 1e-7;
    Eigen::Matrix2d J;
    for (int col = 0; col < 2; ++col) {
      Eigen::Vector2d xp = x, xm = x;
      xp[col] += h;
      xm[col] -= h;
      J.col(col) = (closure_gaps(c, xp[0], xp[1]) - closure_gaps(c, xm[0], xm[1])) /
                   (2.0 * h);
    }
    const double det = J(0, 0) * J(1, 1) - J(0, 1) * J(1, 0);
    if (std::abs(det) < 1e-300) return std::nullopt;
    Eigen::Vector2d step{(-g[0] * J(1, 1) + g[1] * J(0, 1)) / det,
                         (-g[1] * J(0, 0) + g[0] * J(1, 0)) / det};
    step = step.cwiseMax(-0.2).cwiseMin(0.2);
    x += step;
    if (x[1] < 0.0) x[1] = -x[1];  // mirror symmetry: stay on beta3 >= 0
  }
  return std::nullopt;
}

}  // namespace detail

/// Independent scan-plus-refine search for all interlinked solutions with
/// beta3 >= 0. Stage 1 follows the stated recipe (coarse grid over the
/// (theta3, beta3) quarter-plane, local minima refined by Newton); stage 2
/// walks the downconversion-cone curve beta3(theta3) on a fine theta3 grid
/// and bisects sign changes of the second closure gap, which pins near-planar
/// roots the coarse grid can miss.
inline std::vector<OracleSolution> brute_force_solutions(const ipm::PMQueryd& q,
                                                         int grid = 200) {
  const auto c = detail::closure_context(q);
  std::vector<OracleSolution> found;
  auto add = [&](double t3, double b3) {
    for (const auto& f : found)
      if (std::abs(f.theta3 - t3) < 1e-6 && std::abs(f.beta3 - b3) < 1e-6) return;
    found.push_back({t3, b3});
  };

  // stage 1: grid + Newton
  const double t_lo = ipm::deg_to_rad(-89.0), t_hi = ipm::deg_to_rad(89.0);
  const double b_lo = 0.0, b_hi = ipm::deg_to_rad(89.0);
  std::vector<double> F(static_cast<std::size_t>(grid) * grid);
  auto at = [&](int i, int j) -> double& {
    return F[static_cast<std::size_t>(i) * grid + j];
  };
  std::vector<double> ts(grid), bs(grid);
  for (int i = 0; i < grid; ++i)
    ts[i] = t_lo + (t_hi - t_lo) * i / (grid - 1);
  for (int j = 0; j < grid; ++j)
    bs[j] = b_lo + (b_hi - b_lo) * j / (grid - 1);
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j)
      at(i, j) = detail::closure_gaps(c, ts[i], bs[j]).squaredNorm();
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      const double v = at(i, j);
      if (v > 1e-2) continue;
      if (i > 0 && at(i - 1, j) < v) continue;
      if (i + 1 < grid && at(i + 1, j) < v) continue;
      if (j > 0 && at(i, j - 1) < v) continue;
      if (j + 1 < grid && at(i, j + 1) < v) continue;
      if (auto root = detail::newton_refine(c, {ts[i], bs[j]}))
        add((*root)[0], (*root)[1]);
    }

  // stage 2: 1-D walk along the downconversion cone
  const double A = (c.k4 * c.k4 + c.k3 * c.k3 - c.k1 * c.k1) / (2.0 * c.k3 * c.k4);
  if (A > 0.0 && A <= 1.0) {
    const int fine = 4000;
    auto beta_on_cone = [&](double t3) -> std::optional<double> {
      const double cb3 = A / std::cos(t3);
      if (cb3 > 1.0 || cb3 <= 0.0) return std::nullopt;
      return std::acos(cb3);
    };
    auto g2_on_cone = [&](double t3) -> std::optional<double> {
      const auto b3 = beta_on_cone(t3);
      if (!b3) return std::nullopt;
      return detail::closure_gaps(c, t3, *b3)[1];
    };
    double prev_t = 0.0, prev_val = 0.0;
    bool have_prev = false;
    for (int i = 0; i <= fine; ++i) {
      const double t3 = t_lo + (t_hi - t_lo) * i / fine;
      const auto g = g2_on_cone(t3);
      if (g && have_prev && *g * prev_val <= 0.0) {
        const double g_lo = prev_val;
        double lo = prev_t, hi = t3;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          const auto gm = g2_on_cone(mid);
          if (!gm) break;
          if (*gm * g_lo <= 0.0)
            hi = mid;
          else
            lo = mid;
        }
        const double t_root = 0.5 * (lo + hi);
        if (const auto b_root = beta_on_cone(t_root)) {
          const auto g_root = detail::closure_gaps(c, t_root, *b_root);
          if (g_root.lpNorm<Eigen::Infinity>() < 1e-10) add(t_root, *b_root);
        }
      }
      if (g) {
        prev_val = *g;
        prev_t = t3;
        have_prev = true;
      } else {
        have_prev = false;
      }
    }
  }

  std::sort(found.begin(), found.end(),
            [](const OracleSolution& a, const OracleSolution& b) {
              return a.theta3 < b.theta3;
            });
  return found;
}

/// Deterministic xorshift for reproducible random queries in tests.
struct TestRand {
  std::uint64_t state;
  explicit TestRand(std::uint64_t seed) : state(seed ? seed : 1) {}
  double uniform(double lo, double hi) {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return lo + (hi - lo) * (static_cast<double>(state >> 11) * 0x1.0p-53);
  }
};

}  // namespace ipm_test
