// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sstream>

#include <Eigen/SVD>

#include "risloc/channel.hpp"
#include "risloc/config.hpp"
#include "risloc/geometry.hpp"
#include "risloc/rng.hpp"
#include "risloc/steering.hpp"

using namespace risloc;

namespace
{
ScenarioConfig small_scenario()
{
    ScenarioConfig cfg = paper_preset().scenario;
    cfg.layout = RisLayout::regular(cfg.p_ris, 6, 6, 0.5 * cfg.wavelength());
    cfg.n_subcarriers = 16;
    cfg.n_symbols = 8;
    return cfg;
}
} // namespace

TEST_CASE("synthesize_gains magnitudes follow the free-space products")
{
    const ScenarioConfig cfg = paper_preset().scenario;
    std::mt19937_64 rng = make_rng(cfg.rng_seed);
    const std::vector<Cplx> gains = synthesize_gains(cfg, rng);
    REQUIRE(gains.size() == 2);

    const double lambda = cfg.wavelength();
    const double rho_br = lambda / (4 * kPi * 60.20797);
    CHECK(rho_br == doctest::Approx(1.41614e-5).epsilon(1e-5));
    CHECK(std::abs(gains[0]) == doctest::Approx(rho_br * lambda / (4 * kPi * 6.78233)).epsilon(1e-5));

    ScenarioConfig no_refl = cfg;
    no_refl.reflection_loss = 0.0;
    std::mt19937_64 rng2 = make_rng(cfg.rng_seed);
    const std::vector<Cplx> g2 = synthesize_gains(no_refl, rng2);
    CHECK(std::abs(g2[1]) == 0.0);

    std::mt19937_64 rng3 = make_rng(cfg.rng_seed);
    const std::vector<Cplx> g3 = synthesize_gains(cfg, rng3);
    CHECK(g3[0] == gains[0]);
    CHECK(g3[1] == gains[1]);
}

TEST_CASE("single-path noiseless observation has the closed form")
{
    ScenarioConfig cfg = small_scenario();
    cfg.scatterers.clear();
    cfg.n_symbols = 1;

    ChannelParams eta = channel_from_geometry(cfg, {Cplx(2e-9, 1e-9)});
    RisProfile w;
    w.w = CMat::Ones(cfg.layout.size(), 1);
    std::mt19937_64 rng = make_rng(1);
    const ReceivedSignal y = synthesize_received(cfg, eta, w, false, rng);

    const CVec b = combined_steering_b(cfg.p_ue, cfg.p_bs, cfg.layout, cfg.wavelength());
    const Cplx bsum = b.sum();
    for (int n = 0; n < cfg.n_subcarriers; ++n)
    {
        const Cplx expect = std::sqrt(cfg.tx_power) * eta.paths[0].rho *
                            std::polar(1.0, -2 * kPi * eta.paths[0].tau * n * cfg.subcarrier_spacing) *
                            bsum;
        CHECK(std::abs(y.y(n, 0) - expect) < 1e-12 * std::abs(expect));
    }
}

TEST_CASE("noiseless observation is low rank and linear in the inputs")
{
    const ScenarioConfig cfg = small_scenario();
    std::mt19937_64 rng = make_rng(3);
    const std::vector<Cplx> gains = synthesize_gains(cfg, rng);
    const ChannelParams eta = channel_from_geometry(cfg, gains);
    const RisProfile w = random_profile(cfg.layout.size(), cfg.n_symbols, rng);

    std::mt19937_64 r1 = make_rng(9);
    const CMat y = synthesize_received(cfg, eta, w, false, r1).y;
    Eigen::JacobiSVD<CMat> svd(y);
    CHECK(svd.singularValues()[2] < 1e-10 * svd.singularValues()[0]);

    // determinism without noise
    std::mt19937_64 r2 = make_rng(10);
    const CMat y2 = synthesize_received(cfg, eta, w, false, r2).y;
    CHECK((y - y2).norm() == 0.0);

    // linearity in rho
    ChannelParams eta2 = eta;
    for (PathParams &p : eta2.paths)
        p.rho *= 2.0;
    const CMat y3 = synthesize_received(cfg, eta2, w, false, r2).y;
    CHECK((y3 - 2.0 * y).norm() < 1e-12 * y.norm());
}

TEST_CASE("empirical SNR definition")
{
    CMat y = CMat::Ones(4, 8) * Cplx(3e-3, 0.0);
    CHECK(snr_empirical_db(y, 9e-6) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(snr_empirical_db(std::sqrt(10.0) * y, 9e-6) == doctest::Approx(10.0).epsilon(1e-9));

    const double sigma2 = noise_var_for_snr_db(y, 7.0);
    CHECK(snr_empirical_db(y, sigma2) == doctest::Approx(7.0).epsilon(1e-12));
}

TEST_CASE("config parse round-trips the documented keys")
{
    std::istringstream in(
        "# test scenario\n"
        "p_bs = 0,-60,5\n"
        "p_ue = 3,6,-1\n"
        "scatterer = -1,3,2\n"
        "clock_offset_s = 1e-7\n"
        "tx_power_dbm = 29\n"
        "noise_dbm = -115.2\n"
        "ris_nx = 24\nris_nz = 24\n"
        "seed = 42\n");
    const FullConfig fc = parse_config(in);
    CHECK(fc.scenario.layout.n_x == 24);
    CHECK(fc.scenario.rng_seed == 42);
    CHECK(fc.scenario.tx_power == doctest::Approx(dbm_to_watt(29.0)));
    CHECK(fc.scenario.scatterers.size() == 1);

    std::istringstream bad("nonsense_key = 3\n");
    CHECK_THROWS_AS(parse_config(bad), std::invalid_argument);
}
