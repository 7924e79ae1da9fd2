// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "risloc/config.hpp"
#include "risloc/geometry.hpp"

using namespace risloc;

TEST_CASE("spherical_from_position reproduces the default scenario geometry")
{
    const Vec3 p0(3.0, 6.0, -1.0);
    const Vec3 p_ris(0.0, 0.0, 0.0);
    const Spherical s = spherical_from_position(p0, p_ris);
    CHECK(s.d == doctest::Approx(6.78233).epsilon(1e-5));
    CHECK(s.phi_az == doctest::Approx(1.10715).epsilon(1e-5));
    CHECK(s.phi_el == doctest::Approx(1.71880).epsilon(1e-5));

    const Spherical s1 = spherical_from_position(Vec3(-1.0, 3.0, 2.0), p_ris);
    CHECK(s1.d == doctest::Approx(3.74166).epsilon(1e-5));
}

TEST_CASE("spherical_from_position zenith and degenerate cases")
{
    const Spherical s = spherical_from_position(Vec3(0, 0, 1), Vec3::Zero());
    CHECK(s.phi_el == doctest::Approx(0.0));
    CHECK(s.d == doctest::Approx(1.0));

    CHECK_THROWS_AS(spherical_from_position(Vec3(1, 2, 3), Vec3(1, 2, 3)), DegenerateGeometryError);
}

TEST_CASE("position_from_spherical inverts spherical_from_position")
{
    CHECK((position_from_spherical(1.0, 0.0, 0.73, Vec3(1, 1, 1)) - Vec3(1, 1, 2)).norm() ==
          doctest::Approx(0.0).epsilon(1e-14));

    const Vec3 p0(3.0, 6.0, -1.0);
    const Spherical s = spherical_from_position(p0, Vec3::Zero());
    CHECK((position_from_spherical(s.d, s.phi_el, s.phi_az, Vec3::Zero()) - p0).norm() < 1e-12);

    // rounded spec inputs land on the UE position within rounding error
    const Vec3 p = position_from_spherical(6.78233, 1.71880, 1.10715, Vec3::Zero());
    CHECK((p - p0).norm() < 5e-4);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ud(0.1, 100.0), uel(0.05, kPi - 0.05), uaz(-kPi, kPi);
    for (int i = 0; i < 100; ++i)
    {
        const double d = ud(rng), el = uel(rng), az = uaz(rng);
        const Vec3 p2 = position_from_spherical(d, el, az, Vec3(0.5, -0.2, 1.0));
        const Spherical s2 = spherical_from_position(p2, Vec3(0.5, -0.2, 1.0));
        CHECK((position_from_spherical(s2.d, s2.phi_el, s2.phi_az, Vec3(0.5, -0.2, 1.0)) - p2).norm() <
              1e-10);
    }
}

TEST_CASE("toas_from_geometry matches the default scenario")
{
    const ScenarioConfig cfg = paper_preset().scenario;
    const std::vector<double> taus = toas_from_geometry(cfg);
    REQUIRE(taus.size() == 2);
    CHECK(taus[0] == doctest::Approx(3.23301e-7).epsilon(1e-5));
    CHECK(taus[1] == doctest::Approx(3.32602e-7).epsilon(1e-5));

    ScenarioConfig triv = cfg;
    triv.clock_offset = 0.0;
    triv.p_ue = triv.p_ris;
    triv.scatterers.clear();
    const double d_b = (triv.p_ris - triv.p_bs).norm();
    CHECK(toas_from_geometry(triv)[0] == doctest::Approx(d_b / kSpeedOfLight));
}

TEST_CASE("fresnel_bounds of the paper layout")
{
    const ScenarioConfig cfg = paper_preset().scenario;
    const auto [lo, hi] = fresnel_bounds(cfg.layout, cfg.wavelength());
    CHECK(lo == doctest::Approx(1.2727).epsilon(1e-3));
    CHECK(hi == doctest::Approx(23.667).epsilon(1e-3));

    // doubling the aperture quadruples the far bound
    const RisLayout big = RisLayout::regular(cfg.p_ris, 2 * cfg.layout.n_x - 1, 2 * cfg.layout.n_z - 1,
                                             cfg.layout.spacing);
    // aperture scales by exactly 2 with 2*(n-1) spacings
    const auto [lo2, hi2] = fresnel_bounds(big, cfg.wavelength());
    CHECK(hi2 == doctest::Approx(4.0 * hi).epsilon(1e-12));
    CHECK(lo2 > lo);

    const RisLayout single = RisLayout::regular(cfg.p_ris, 1, 1, cfg.layout.spacing);
    const auto [lo1, hi1] = fresnel_bounds(single, cfg.wavelength());
    CHECK(lo1 == 0.0);
    CHECK(hi1 == 0.0);
}

TEST_CASE("layout grid is x-major and centered")
{
    const RisLayout lay = RisLayout::regular(Vec3(0, 0, 0), 2, 3, 0.5);
    REQUIRE(lay.element_positions.size() == 6);
    // r = i_x * n_z + i_z
    CHECK((lay.element_positions[0] - Vec3(-0.25, 0, -0.5)).norm() < 1e-15);
    CHECK((lay.element_positions[1] - Vec3(-0.25, 0, 0.0)).norm() < 1e-15);
    CHECK((lay.element_positions[3] - Vec3(0.25, 0, -0.5)).norm() < 1e-15);
    Vec3 mean = Vec3::Zero();
    for (const Vec3 &p : lay.element_positions)
        mean += p;
    CHECK((mean / 6.0).norm() < 1e-15);
}

TEST_CASE("wrap_angle maps differences onto (-pi, pi]")
{
    CHECK(wrap_angle(0.1) == doctest::Approx(0.1));
    CHECK(wrap_angle(2 * kPi + 0.1) == doctest::Approx(0.1));
    CHECK(wrap_angle(-2 * kPi - 0.1) == doctest::Approx(-0.1));
    CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
}
