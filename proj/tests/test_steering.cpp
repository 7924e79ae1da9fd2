// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "risloc/config.hpp"
#include "risloc/geometry.hpp"
#include "risloc/steering.hpp"

using namespace risloc;

TEST_CASE("near-field steering entries have unit modulus and centered reference")
{
    const ScenarioConfig cfg = desk_preset().scenario;
    const CVec a = nearfield_steering(cfg.p_ue, cfg.layout, cfg.wavelength());
    for (int r = 0; r < a.size(); ++r)
        CHECK(std::abs(a[r]) == doctest::Approx(1.0).epsilon(1e-14));

    // center element of an odd grid sees zero path difference
    const RisLayout odd = RisLayout::regular(Vec3::Zero(), 3, 3, 0.005);
    const CVec a2 = nearfield_steering(Vec3(1.0, 2.0, 0.5), odd, 0.01);
    CHECK(std::abs(a2[4] - Cplx(1.0, 0.0)) < 1e-14);
}

TEST_CASE("far-field steering degenerate and broadside cases")
{
    const RisLayout single = RisLayout::regular(Vec3::Zero(), 1, 1, 0.005);
    const CVec a1 = farfield_steering(0.7, -0.3, single, 0.01);
    REQUIRE(a1.size() == 1);
    CHECK(std::abs(a1[0] - Cplx(1.0, 0.0)) < 1e-14);

    const RisLayout lay = RisLayout::regular(Vec3::Zero(), 4, 4, 0.005);
    const CVec a = farfield_steering(kPi / 2, kPi / 2, lay, 0.01);
    for (int r = 0; r < a.size(); ++r)
        CHECK(std::abs(a[r] - Cplx(1.0, 0.0)) < 1e-12);
}

TEST_CASE("near-field steering converges to the far-field vector at range")
{
    const double lambda = 0.0107142857142857;
    const RisLayout lay = RisLayout::regular(Vec3::Zero(), 8, 8, lambda / 2);
    const double range = 1e4 * lay.aperture();
    const double el = 1.9, az = 0.8;
    const Vec3 p = position_from_spherical(range, el, az, Vec3::Zero());
    const CVec near = nearfield_steering(p, lay, lambda);
    const CVec far = farfield_steering(el, az, lay, lambda);
    double worst = 0.0;
    for (int r = 0; r < near.size(); ++r)
        worst = std::max(worst, std::abs(std::arg(near[r] / far[r])));
    CHECK(worst <= 1e-3);

    const Vec3 p_far = position_from_spherical(1e6, el, az, Vec3::Zero());
    const CVec near2 = nearfield_steering(p_far, lay, lambda);
    for (int r = 0; r < near2.size(); ++r)
        CHECK(std::abs(std::arg(near2[r] / far[r])) < 1e-3);
}

TEST_CASE("combined steering is the elementwise cascade of the two links")
{
    const ScenarioConfig cfg = desk_preset().scenario;
    const double lambda = cfg.wavelength();
    const CVec b = combined_steering_b(cfg.p_ue, cfg.p_bs, cfg.layout, lambda);
    for (int r = 0; r < b.size(); ++r)
        CHECK(std::abs(b[r]) == doctest::Approx(1.0).epsilon(1e-14));

    // brute-force per-element phase sum
    const double d_ue = (cfg.p_ue - cfg.p_ris).norm();
    const double d_bs = (cfg.p_bs - cfg.p_ris).norm();
    for (int r = 0; r < b.size(); r += 37)
    {
        const Vec3 &pr = cfg.layout.element_positions[r];
        const double path = ((cfg.p_ue - pr).norm() - d_ue) + ((cfg.p_bs - pr).norm() - d_bs);
        const Cplx expect = std::polar(1.0, -2.0 * kPi * path / lambda);
        CHECK(std::abs(b[r] - expect) < 1e-12);
    }

    const CVec ones_a = nearfield_steering(cfg.p_ris + Vec3(0, 1e9, 0), cfg.layout, lambda);
    (void)ones_a; // far enough that entries are ~1; cascade of ones is ones
}

TEST_CASE("analytic steering derivatives match central finite differences")
{
    const ScenarioConfig cfg = desk_preset().scenario;
    const RisLayout lay = RisLayout::regular(cfg.p_ris, 6, 5, cfg.layout.spacing);
    const double lambda = cfg.wavelength();
    const double d = 6.78233, el = 1.71880, az = 1.10715;

    const SteeringDerivs sd = combined_steering_derivs(d, el, az, cfg.p_bs, lay, lambda);
    auto b_at = [&](double dd, double e, double a) {
        return combined_steering_b(position_from_spherical(dd, e, a, cfg.p_ris), cfg.p_bs, lay, lambda);
    };
    // steps balance truncation against rounding noise in the phase sums
    const double h = 1e-5;
    const double hd = 1e-3;
    const CVec fd_el = (b_at(d, el + h, az) - b_at(d, el - h, az)) / (2 * h);
    const CVec fd_az = (b_at(d, el, az + h) - b_at(d, el, az - h)) / (2 * h);
    const CVec fd_d = (b_at(d + hd, el, az) - b_at(d - hd, el, az)) / (2 * hd);
    CHECK((sd.d_el - fd_el).norm() / fd_el.norm() < 1e-6);
    CHECK((sd.d_az - fd_az).norm() / fd_az.norm() < 1e-6);
    CHECK((sd.d_d - fd_d).norm() / fd_d.norm() < 1e-6);
    CHECK((sd.b - b_at(d, el, az)).norm() < 1e-13);
}
