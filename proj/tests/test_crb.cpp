// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "risloc/channel.hpp"
#include "risloc/config.hpp"
#include "risloc/crb.hpp"
#include "risloc/geometry.hpp"
#include "risloc/rng.hpp"
#include "risloc/steering.hpp"

using namespace risloc;

namespace
{
ScenarioConfig toy_scenario()
{
    ScenarioConfig cfg = paper_preset().scenario;
    cfg.layout = RisLayout::regular(cfg.p_ris, 4, 4, 0.5 * cfg.wavelength());
    cfg.n_subcarriers = 6;
    cfg.n_symbols = 8;
    return cfg;
}

// Central finite difference of mu with respect to channel parameter k.
Cplx fd_mu(const ChannelParams &eta, int t, int n, const CMat &w, const ScenarioConfig &cfg,
           int param, double h)
{
    RVec flat = eta.flatten();
    RVec up = flat, dn = flat;
    up[param] += h;
    dn[param] -= h;
    const Cplx mu_up = mu_and_derivatives(ChannelParams::unflatten(up), t, n, w, cfg).mu;
    const Cplx mu_dn = mu_and_derivatives(ChannelParams::unflatten(dn), t, n, w, cfg).mu;
    return (mu_up - mu_dn) / (2.0 * h);
}
} // namespace

TEST_CASE("mu derivatives match finite differences and the phase identities")
{
    const ScenarioConfig cfg = toy_scenario();
    std::mt19937_64 rng = make_rng(31);
    const std::vector<Cplx> gains = synthesize_gains(cfg, rng);
    const ChannelParams eta = channel_from_geometry(cfg, gains);
    const CMat w = random_profile(cfg.layout.size(), cfg.n_symbols, rng).w;

    for (int t : {0, 3})
        for (int n : {0, 5})
        {
            const MuDerivs md = mu_and_derivatives(eta, t, n, w, cfg);
            for (int param = 0; param < 12; ++param)
            {
                // per-coordinate steps: gains are linear, angles need small
                // steps, distance and delay need larger ones to beat the
                // rounding noise of the phase sums
                double h = 1e-6;
                switch (param % 6)
                {
                case 0:
                case 1: h = 1e-3 * std::max(1.0, std::abs(eta.flatten()[param])); break;
                case 2:
                case 3: h = 1e-5; break;
                case 4: h = 1e-3; break;
                case 5: h = 1e-13; break;
                }
                const Cplx fd = fd_mu(eta, t, n, w, cfg, param, h);
                const double denom = std::max(std::abs(fd), 1e-12 * std::abs(md.mu));
                CHECK(std::abs(md.d_eta[param] - fd) / denom < 1e-6);
            }

            // tau partial is the exact phase-derivative identity per path
            ScenarioConfig single = cfg;
            single.scatterers.clear();
            ChannelParams eta1;
            eta1.paths = {eta.paths[0]};
            const MuDerivs md1 = mu_and_derivatives(eta1, t, n, w, single);
            const Cplx expect =
                Cplx(0, -1) * (2.0 * kPi * n * cfg.subcarrier_spacing) * md1.mu;
            CHECK(std::abs(md1.d_eta[5] - expect) <= 1e-10 * std::abs(expect));

            // d mu / d Re(rho) at any rho equals mu / rho for one path
            const Cplx ratio = md1.mu / eta1.paths[0].rho;
            CHECK(std::abs(md1.d_eta[0] - ratio) < 1e-10 * std::abs(ratio));
        }
}

TEST_CASE("channel FIM scales as 1/sigma^2, is symmetric, and matches a brute-force oracle")
{
    ScenarioConfig cfg = toy_scenario();
    cfg.scatterers.clear();
    std::mt19937_64 rng = make_rng(32);
    ChannelParams eta = channel_from_geometry(cfg, {Cplx(1e-9, 2e-9)});
    const CMat w = random_profile(cfg.layout.size(), cfg.n_symbols, rng).w;

    const RMat f = fim_channel(eta, w, cfg);
    CHECK((f - f.transpose()).norm() < 1e-12 * f.norm());

    ScenarioConfig cfg2 = cfg;
    cfg2.noise_var *= 2.0;
    const RMat f2 = fim_channel(eta, w, cfg2);
    CHECK((f2 - 0.5 * f).norm() < 1e-12 * f.norm());

    // independent oracle: accumulate FD-derivative outer products
    RMat oracle = RMat::Zero(6, 6);
    for (int t = 0; t < cfg.n_symbols; ++t)
        for (int n = 0; n < cfg.n_subcarriers; ++n)
        {
            Eigen::RowVectorXcd row(6);
            for (int param = 0; param < 6; ++param)
            {
                double h = 1e-6;
                switch (param)
                {
                case 0:
                case 1: h = 1e-12; break; // linear anyway
                case 2:
                case 3: h = 1e-5; break;
                case 4: h = 1e-3; break;
                case 5: h = 1e-13; break;
                }
                row[param] = fd_mu(eta, t, n, w, cfg, param, h);
            }
            oracle += (2.0 / cfg.noise_var) * (row.adjoint() * row).real();
        }
    CHECK((f - oracle).norm() < 1e-5 * oracle.norm());
}

TEST_CASE("position Jacobian matches finite differences of the geometry map")
{
    const ScenarioConfig cfg = toy_scenario();
    std::mt19937_64 rng = make_rng(33);
    const std::vector<Cplx> gains = synthesize_gains(cfg, rng);
    const ChannelParams eta = channel_from_geometry(cfg, gains);
    const PositionEta eta_p = position_eta_from_channel(eta, cfg);

    const RMat jac = jacobian_position(eta_p, cfg);
    REQUIRE(jac.rows() == 11);
    REQUIRE(jac.cols() == 12);

    // d d_s / d p_s is a unit bearing
    CHECK(jac.block<3, 1>(0, 4).norm() == doctest::Approx(1.0).epsilon(1e-12));
    // d tau_s / d Delta = 1
    CHECK(jac(6, 5) == doctest::Approx(1.0));
    CHECK(jac(6, 11) == doctest::Approx(1.0));

    auto flatten_eta = [&](const PositionEta &ep) {
        return channel_from_position_eta(ep, cfg).flatten();
    };
    for (int i = 0; i < 11; ++i)
    {
        PositionEta up = eta_p, dn = eta_p;
        const double h = (i == 6) ? 1e-12 : 1e-7; // Delta vs meters
        if (i < 6)
        {
            up.positions[i / 3][i % 3] += h;
            dn.positions[i / 3][i % 3] -= h;
        }
        else if (i == 6)
        {
            up.delta += h;
            dn.delta -= h;
        }
        else if (i < 9)
        {
            const int s = i - 7;
            up.rho[s] += Cplx(h, 0);
            dn.rho[s] -= Cplx(h, 0);
        }
        else
        {
            const int s = i - 9;
            up.rho[s] += Cplx(0, h);
            dn.rho[s] -= Cplx(0, h);
        }
        const RVec fd = (flatten_eta(up) - flatten_eta(dn)) / (2.0 * h);
        for (int j = 0; j < 12; ++j)
        {
            const double denom = std::max(std::abs(fd[j]), 1e-3);
            CHECK(std::abs(jac(i, j) - fd[j]) / denom < 1e-6);
        }
    }
}

TEST_CASE("Jacobian rejects degenerate geometry")
{
    const ScenarioConfig cfg = toy_scenario();
    PositionEta zenith;
    zenith.positions = {Vec3(0, 0, 5), Vec3(1, 2, 3)};
    zenith.delta = 0.0;
    zenith.rho = {Cplx(1, 0), Cplx(1, 0)};
    CHECK_THROWS_AS(jacobian_position(zenith, cfg), DegenerateGeometryError);
}

TEST_CASE("bounds scale exactly with noise and flag unidentifiable setups")
{
    ScenarioConfig cfg = toy_scenario();
    std::mt19937_64 rng = make_rng(34);
    const std::vector<Cplx> gains = synthesize_gains(cfg, rng);
    const ChannelParams eta = channel_from_geometry(cfg, gains);
    const PositionEta eta_p = position_eta_from_channel(eta, cfg);
    const CMat w = random_profile(cfg.layout.size(), cfg.n_symbols, rng).w;

    const BoundReport rep = bounds(eta_p, w, cfg);
    CHECK(rep.peb > 0.0);
    CHECK(rep.ceb > 0.0);
    for (int i = 0; i < rep.crb_channel.size(); ++i)
        CHECK(rep.crb_channel[i] > 0.0);

    ScenarioConfig cfg4 = cfg;
    cfg4.noise_var *= 4.0;
    const BoundReport rep4 = bounds(eta_p, w, cfg4);
    CHECK(rep4.peb == doctest::Approx(2.0 * rep.peb).epsilon(1e-10));
    CHECK(rep4.ceb == doctest::Approx(2.0 * rep.ceb).epsilon(1e-10));

    // single subcarrier: delay and clock cannot be separated
    ScenarioConfig flat = cfg;
    flat.n_subcarriers = 1;
    const CMat w1 = w;
    CHECK_THROWS_AS(bounds(eta_p, w1, flat), DegenerateGeometryError);
}

TEST_CASE("PEB decreases with surface size and is rotation invariant")
{
    std::mt19937_64 rng = make_rng(35);
    double last = std::numeric_limits<double>::infinity();
    for (int n : {8, 12, 16, 24})
    {
        ScenarioConfig cfg = paper_preset().scenario;
        cfg.layout = RisLayout::regular(cfg.p_ris, n, n, 0.5 * cfg.wavelength());
        cfg.n_subcarriers = 16;
        cfg.n_symbols = 32;
        std::mt19937_64 r2 = make_rng(36);
        const std::vector<Cplx> gains = synthesize_gains(cfg, r2);
        const ChannelParams eta = channel_from_geometry(cfg, gains);
        const PositionEta eta_p = position_eta_from_channel(eta, cfg);
        const CMat w = random_profile(cfg.layout.size(), cfg.n_symbols, rng).w;
        const double peb = bounds(eta_p, w, cfg).peb;
        CHECK(peb < last);
        last = peb;
    }

    // global rotation of every position (and the element grid) preserves bounds
    ScenarioConfig cfg = toy_scenario();
    std::mt19937_64 r3 = make_rng(37);
    const std::vector<Cplx> gains = synthesize_gains(cfg, r3);
    const ChannelParams eta = channel_from_geometry(cfg, gains);
    const CMat w = random_profile(cfg.layout.size(), cfg.n_symbols, r3).w;
    const double peb0 = bounds(position_eta_from_channel(eta, cfg), w, cfg).peb;

    Eigen::AngleAxisd rot(0.7, Vec3(1, 2, 0.5).normalized());
    ScenarioConfig rcfg = cfg;
    rcfg.p_bs = rot * cfg.p_bs;
    rcfg.p_ue = rot * cfg.p_ue;
    rcfg.p_ris = rot * cfg.p_ris;
    for (Vec3 &s : rcfg.scatterers)
        s = rot * s;
    for (Vec3 &p : rcfg.layout.element_positions)
        p = rot * p;
    rcfg.layout.center = rot * cfg.layout.center;

    std::mt19937_64 r4 = make_rng(37);
    const std::vector<Cplx> rgains = synthesize_gains(rcfg, r4);
    const ChannelParams reta = channel_from_geometry(rcfg, rgains);
    PositionEta reta_p;
    reta_p.positions = {rcfg.p_ue, rcfg.scatterers[0]};
    reta_p.delta = rcfg.clock_offset;
    reta_p.rho = {reta.paths[0].rho, reta.paths[1].rho};
    const double peb1 = bounds(reta_p, w, rcfg).peb;
    CHECK(peb1 == doctest::Approx(peb0).epsilon(1e-6));
}
