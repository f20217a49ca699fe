#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "ipm/geometry.hpp"
#include "support.hpp"

using namespace ipm;

TEST_CASE("refract_out") {
  SUBCASE("vacuum identity") {
    for (double b : {-0.4, 0.0, 0.3})
      for (double t : {-0.8, -0.1, 0.0, 0.5}) {
        const auto e = refract_out(1.0, b, t);
        CHECK(e.beta == doctest::Approx(b).epsilon(1e-15));
        CHECK(e.theta == doctest::Approx(t).epsilon(1e-15));
      }
  }

  SUBCASE("collapses to planar Snell at beta = 0") {
    const double n = 1.66, t = 0.21;
    const auto e = refract_out(n, 0.0, t);
    CHECK(e.beta == 0.0);
    CHECK(std::sin(e.theta) == doctest::Approx(n * std::sin(t)).epsilon(1e-15));
  }

  SUBCASE("preserves signs") {
    const auto e = refract_out(1.5, -0.1, 0.2);
    CHECK(e.beta < 0.0);
    CHECK(e.theta > 0.0);
  }

  SUBCASE("total internal reflection names the field and the sine") {
    CHECK_THROWS_WITH_AS(refract_out(1.7, 0.65, 0.0, "field 3"),
                         doctest::Contains("field 3"), TotalInternalReflection);
    try {
      refract_out(1.7, 0.65, 0.0, "field 3");
    } catch (const TotalInternalReflection& e) {
      CHECK(std::abs(e.violating_sine()) > 1.0);
    }
    // in-plane overshoot of the theta sine
    CHECK_THROWS_AS(refract_out(1.7, 0.0, 0.9, "field 1"),
                    TotalInternalReflection);
  }
}

TEST_CASE("refract_in_ordinary") {
  SUBCASE("n = 1 identity") {
    CHECK(refract_in_ordinary(1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-15));
  }

  SUBCASE("frozen pump-5 internal angle") {
    const double n5 = n_ordinary(ipm_test::bbo(), 1047.0);
    CHECK(rad_to_deg(refract_in_ordinary(n5, deg_to_rad(-34.8))) ==
          doctest::Approx(-20.166209672).epsilon(1e-9));
  }

  SUBCASE("refract_out inverts it") {
    const double n = 1.655;
    for (double t : {-0.6, -0.2, 0.05, 0.5}) {
      const double inside = refract_in_ordinary(n, t);
      CHECK(refract_out(n, 0.0, inside).theta == doctest::Approx(t).epsilon(1e-12));
    }
  }
}

TEST_CASE("refract_in_pump4") {
  const auto& c = ipm_test::bbo();
  const double cut = c.cut_angle;

  SUBCASE("normal incidence passes through") {
    const auto r = refract_in_pump4(c, 349.0, 0.0, cut);
    CHECK(r.theta_int == 0.0);
    CHECK(r.alpha == doctest::Approx(cut).epsilon(1e-15));
    CHECK(r.n4 ==
          doctest::Approx(n_extraordinary_at_angle(c, 349.0, cut)).epsilon(1e-15));
  }

  SUBCASE("one-degree incidence matches the frozen fixture and first order") {
    const auto r = refract_in_pump4(c, 349.0, deg_to_rad(1.0), cut);
    CHECK(rad_to_deg(r.theta_int) ==
          doctest::Approx(0.600473957525).epsilon(1e-9));
    // first-order estimate incidence/n4(cut) is good to ~1e-5 rad here
    const double first_order = deg_to_rad(1.0) / n_extraordinary_at_angle(c, 349.0, cut);
    CHECK(std::abs(r.theta_int - first_order) < 2e-5);
    CHECK(std::abs(r.theta_int - first_order) > 1e-7);  // but not exact
  }

  SUBCASE("iteration contracts") {
    std::vector<double> iterates;
    refract_in_pump4(c, 349.0, deg_to_rad(8.0), cut, &iterates);
    REQUIRE(iterates.size() >= 3);
    REQUIRE(iterates.size() < 100);
    for (std::size_t i = 2; i + 1 < iterates.size(); ++i) {
      const double d_prev = std::abs(iterates[i] - iterates[i - 1]);
      const double d_next = std::abs(iterates[i + 1] - iterates[i]);
      CHECK(d_next <= d_prev);
    }
  }

  SUBCASE("pump4_rotation_for_alpha inverts it") {
    for (double inc_deg : {-6.0, -1.5, 0.5, 4.0, 8.0}) {
      const auto r = refract_in_pump4(c, 349.0, deg_to_rad(inc_deg), cut);
      CHECK(pump4_rotation_for_alpha(c, 349.0, r.alpha) ==
            doctest::Approx(deg_to_rad(inc_deg)).epsilon(1e-11));
    }
  }
}

TEST_CASE("project_to_screen") {
  const LabConfig lab{100.0, RotationMode::normal_incidence};

  SUBCASE("axis maps to origin") {
    const auto s = project_to_screen(0.0, 0.0, lab, 550.0, 4, {});
    CHECK(s.x_mm == 0.0);
    CHECK(s.y_mm == 0.0);
  }

  SUBCASE("in-plane ray lands on the y axis") {
    const auto s = project_to_screen(0.0, 0.21, lab, 550.0, 1, {});
    CHECK(s.x_mm == 0.0);
    CHECK(s.y_mm == doctest::Approx(100.0 * std::tan(0.21)).epsilon(1e-15));
  }

  SUBCASE("frozen upconverted-spot height") {
    const auto s = project_to_screen(0.0, deg_to_rad(-12.78), lab, 446.4, 2, {});
    CHECK(s.y_mm == doctest::Approx(-22.68273712).epsilon(1e-9));
  }

  SUBCASE("agrees with a direct ray-plane intersection") {
    for (double b : {-0.3, 0.12})
      for (double t : {-0.5, 0.07, 0.4}) {
        const auto s = project_to_screen(b, t, lab, 550.0, 1, {});
        const Eigen::Vector3d u = direction(b, t);
        const double scale = lab.screen_distance_mm / u.z();
        CHECK(s.x_mm == doctest::Approx(scale * u.x()).epsilon(1e-12));
        CHECK(s.y_mm == doctest::Approx(scale * u.y()).epsilon(1e-12));
      }
  }
}

TEST_CASE("solution_externals") {
  const auto& c = ipm_test::bbo();
  const auto res = solve_interlinked(ipm_test::seeded_query(34.2));
  REQUIRE(res.solutions.size() == 2);

  SUBCASE("mirror pair lands mirrored in x, same y") {
    const LabConfig lab{100.0, RotationMode::normal_incidence};
    const auto eu = solution_externals(c, res.solutions[0], lab.mode);
    const auto ed = solution_externals(c, res.solutions[1], lab.mode);
    for (std::size_t f = 0; f < 3; ++f) {
      const auto su = project_to_screen(eu[f].beta_ext, eu[f].theta_ext, lab,
                                        eu[f].lambda_nm, eu[f].field, {});
      const auto sd = project_to_screen(ed[f].beta_ext, ed[f].theta_ext, lab,
                                        ed[f].lambda_nm, ed[f].field, {});
      CHECK(su.x_mm == doctest::Approx(-sd.x_mm).epsilon(1e-12));
      CHECK(su.y_mm == doctest::Approx(sd.y_mm).epsilon(1e-12));
    }
  }

  SUBCASE("all-planar geometry stays on the x = 0 line") {
    PMSolutiond s = res.solutions[0];
    s.beta1 = s.beta2 = s.beta3 = 0.0;
    const LabConfig lab{100.0, RotationMode::normal_incidence};
    const auto ext = solution_externals(c, s, lab.mode);
    for (const auto& f : ext) {
      CHECK(f.beta_ext == 0.0);
      const auto spot = project_to_screen(f.beta_ext, f.theta_ext, lab,
                                          f.lambda_nm, f.field, {});
      CHECK(spot.x_mm == 0.0);
    }
  }

  SUBCASE("tilted mode keeps pump 4 at the lab origin") {
    for (double alpha_deg : {33.2, 33.8, 34.0, 34.6}) {
      const double alpha = deg_to_rad(alpha_deg);
      const double t4 = c.cut_angle - alpha;
      const double rho = pump4_rotation_for_alpha(c, 349.0, alpha);
      const double n4 = n_extraordinary_at_angle(c, 349.0, alpha);
      // pump 4 internal direction through the exit face, then into lab frame
      const auto e = refract_out(n4, 0.0, 0.0 + t4);
      CHECK(e.theta - rho == doctest::Approx(0.0).epsilon(1e-12));
    }
  }

  SUBCASE("tilted and normal modes agree when alpha equals the cut angle") {
    const auto at_cut = solve_interlinked(ipm_test::seeded_query(34.0));
    REQUIRE(!at_cut.solutions.empty());
    const auto& s = at_cut.solutions.front();
    const auto en = solution_externals(c, s, RotationMode::normal_incidence);
    const auto et = solution_externals(c, s, RotationMode::tilted);
    for (std::size_t f = 0; f < 3; ++f) {
      CHECK(en[f].theta_ext == doctest::Approx(et[f].theta_ext).epsilon(1e-12));
      CHECK(en[f].beta_ext == doctest::Approx(et[f].beta_ext).epsilon(1e-12));
    }
  }
}
