// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "risloc/channel.hpp"
#include "risloc/config.hpp"
#include "risloc/crb.hpp"
#include "risloc/geometry.hpp"
#include "risloc/phase_opt.hpp"
#include "risloc/rng.hpp"
#include "risloc/steering.hpp"

using namespace risloc;

namespace
{
ScenarioConfig tiny_scenario(bool with_scatterer)
{
    ScenarioConfig cfg = paper_preset().scenario;
    cfg.layout = RisLayout::regular(cfg.p_ris, 8, 8, 0.5 * cfg.wavelength());
    cfg.n_subcarriers = 16;
    cfg.n_symbols = 16;
    if (!with_scatterer)
        cfg.scatterers.clear();
    return cfg;
}
} // namespace

TEST_CASE("k_matrix columns follow the closed-form factorization")
{
    const ScenarioConfig cfg = tiny_scenario(false);
    std::mt19937_64 rng = make_rng(71);
    const ChannelParams eta = channel_from_geometry(cfg, synthesize_gains(cfg, rng));
    const PathParams &p = eta.paths[0];

    const CMat k0 = k_matrix(p, 0, cfg);
    const Vec3 pos = position_from_spherical(p.d, p.phi_el, p.phi_az, cfg.p_ris);
    const CVec b = combined_steering_b(pos, cfg.p_bs, cfg.layout, cfg.wavelength());
    // column 1 at n = 0: sqrt(P) b (unit phase factor)
    CHECK((k0.col(0) - std::sqrt(cfg.tx_power) * b).norm() < 1e-12 * b.norm());

    const int n = 5;
    const CMat kn = k_matrix(p, n, cfg);
    const Cplx phase = std::polar(1.0, -2 * kPi * p.tau * n * cfg.subcarrier_spacing);
    CHECK((kn.col(0) - std::sqrt(cfg.tx_power) * phase * b).norm() < 1e-12 * b.norm());

    // W^T K_s[n] equals the observation derivative rows from the CRB module
    const CMat w = random_profile(cfg.layout.size(), cfg.n_symbols, rng).w;
    const CMat lhs = w.transpose() * kn; // T x 6
    for (int t = 0; t < cfg.n_symbols; ++t)
    {
        const MuDerivs md = mu_and_derivatives(eta, t, n, w, cfg);
        CHECK((lhs.row(t) - md.d_eta).norm() < 1e-10 * md.d_eta.norm());
    }
}

TEST_CASE("every K column lies in the span of the derivative basis")
{
    const ScenarioConfig cfg = tiny_scenario(true);
    std::mt19937_64 rng = make_rng(72);
    const ChannelParams eta = channel_from_geometry(cfg, synthesize_gains(cfg, rng));

    for (int s = 0; s < eta.n_paths(); ++s)
    {
        const CMat basis = basis_b(eta, cfg).middleCols(4 * s, 4);
        const CMat proj = basis * (basis.adjoint() * basis).inverse() * basis.adjoint();
        for (int n : {0, 7, 15})
        {
            const CMat k = k_matrix(eta.paths[s], n, cfg);
            CHECK((k - proj * k).norm() < 1e-10 * k.norm());
        }
    }
}

TEST_CASE("covariance-domain FIM equals the direct reduced FIM")
{
    const ScenarioConfig cfg = tiny_scenario(true);
    std::mt19937_64 rng = make_rng(73);
    const ChannelParams eta = channel_from_geometry(cfg, synthesize_gains(cfg, rng));

    for (int rep = 0; rep < 3; ++rep)
    {
        const CMat w = random_profile(cfg.layout.size(), cfg.n_symbols, rng).w;
        const RMat via_cov = fim_from_covariance(eta, w * w.adjoint(), cfg, cfg.n_symbols);

        const RMat f_eta = fim_channel(eta, w, cfg);
        const PositionEta eta_p = position_eta_from_channel(eta, cfg);
        const RMat jac = jacobian_position(eta_p, cfg);
        const RMat direct = jac.topRows(3 * eta.n_paths() + 1) * f_eta *
                            jac.topRows(3 * eta.n_paths() + 1).transpose();
        CHECK((via_cov - direct).norm() < 1e-8 * direct.norm());
    }

    // zero covariance, zero information; linearity in Lambda
    const CMat w1 = random_profile(cfg.layout.size(), cfg.n_symbols, rng).w;
    const CMat w2 = random_profile(cfg.layout.size(), cfg.n_symbols, rng).w;
    const CMat l1 = w1 * w1.adjoint(), l2 = w2 * w2.adjoint();
    CHECK(fim_from_covariance(eta, CMat::Zero(64, 64), cfg, cfg.n_symbols).norm() == 0.0);
    const RMat sum = fim_from_covariance(eta, l1 + l2, cfg, cfg.n_symbols);
    const RMat parts =
        fim_from_covariance(eta, l1, cfg, cfg.n_symbols) + fim_from_covariance(eta, l2, cfg, cfg.n_symbols);
    CHECK((sum - parts).norm() < 1e-10 * parts.norm());
}

TEST_CASE("subgradient covariance designs beat random profiles on their prior")
{
    const ScenarioConfig cfg = tiny_scenario(false); // N_s = 0: fast 4x4 design
    std::mt19937_64 rng = make_rng(74);
    const ChannelParams eta = channel_from_geometry(cfg, synthesize_gains(cfg, rng));

    SdpOptions opt;
    opt.max_iters = 600;
    const SdpSolution sol = solve_reduced_sdp(eta, cfg, cfg.n_symbols, opt);
    CHECK(!sol.fallback);
    // PSD check
    Eigen::SelfAdjointEigenSolver<CMat> eig(sol.xi);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * eig.eigenvalues().maxCoeff());

    const BlockdiagSolution bd = solve_blockdiag(eta, cfg, cfg.n_symbols, opt);
    CHECK(bd.weights.minCoeff() >= 0.0);

    // single-path block-diagonal design solves the same problem
    const RMat f_joint = fim_from_covariance(eta, sol.lambda, cfg, cfg.n_symbols);
    const RMat f_block = fim_from_covariance(eta, bd.lambda, cfg, cfg.n_symbols);
    const double peb_joint = peb_from_reduced_fim(f_joint);
    const double peb_block = peb_from_reduced_fim(f_block);
    CHECK(peb_block <= 2.0 * peb_joint);
    CHECK(peb_joint <= 2.0 * peb_block);

    std::vector<double> random_pebs;
    for (int i = 0; i < 5; ++i)
    {
        const CMat w = random_profile(cfg.layout.size(), cfg.n_symbols, rng).w;
        random_pebs.push_back(peb_for_profile(eta, w, cfg));
    }
    std::sort(random_pebs.begin(), random_pebs.end());
    CHECK(peb_block < random_pebs[random_pebs.size() / 2]);
}

TEST_CASE("gaussian randomization emits unit-modulus profiles with the right covariance")
{
    const ScenarioConfig cfg = tiny_scenario(false);
    std::mt19937_64 rng = make_rng(75);
    const ChannelParams eta = channel_from_geometry(cfg, synthesize_gains(cfg, rng));

    SdpOptions opt;
    opt.max_iters = 300;
    const BlockdiagSolution bd = solve_blockdiag(eta, cfg, cfg.n_symbols, opt);
    const RisProfile w = gaussian_randomization(bd.lambda, cfg.n_symbols, 20, eta, cfg, rng);
    REQUIRE(w.w.rows() == cfg.layout.size());
    REQUIRE(w.w.cols() == cfg.n_symbols);
    for (Eigen::Index r = 0; r < w.w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.w.cols(); ++c)
            CHECK(std::abs(w.w(r, c)) == doctest::Approx(1.0).epsilon(1e-12));

    // candidate draws have per-column covariance Lambda
    const CMat factor = covariance_factor(bd.lambda);
    CMat acc = CMat::Zero(factor.rows(), factor.rows());
    std::normal_distribution<double> g(0.0, std::sqrt(0.5));
    const int draws = 10000;
    for (int i = 0; i < draws; ++i)
    {
        CVec r(factor.cols());
        for (Eigen::Index k = 0; k < r.size(); ++k)
            r[k] = Cplx(g(rng), g(rng));
        const CVec cand = factor * r;
        acc.noalias() += cand * cand.adjoint();
    }
    acc /= static_cast<double>(draws);
    CHECK((acc - bd.lambda).norm() < 0.1 * bd.lambda.norm());
}

TEST_CASE("identity covariance yields uniform phases")
{
    const ScenarioConfig cfg = tiny_scenario(false);
    std::mt19937_64 rng = make_rng(76);
    const ChannelParams eta = channel_from_geometry(cfg, synthesize_gains(cfg, rng));
    const CMat lambda = CMat::Identity(cfg.layout.size(), cfg.layout.size());
    const RisProfile w = gaussian_randomization(lambda, cfg.n_symbols, 1, eta, cfg, rng);

    // Kolmogorov-Smirnov against U(-pi, pi] at the 5% level
    std::vector<double> phases;
    for (Eigen::Index r = 0; r < w.w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.w.cols(); ++c)
            phases.push_back(std::arg(w.w(r, c)));
    std::sort(phases.begin(), phases.end());
    double ks = 0.0;
    const double n = static_cast<double>(phases.size());
    for (size_t i = 0; i < phases.size(); ++i)
    {
        const double cdf = (phases[i] + kPi) / (2 * kPi);
        ks = std::max(ks, std::abs(cdf - (i + 1) / n));
        ks = std::max(ks, std::abs(cdf - i / n));
    }
    CHECK(ks < 1.36 / std::sqrt(n)); // 5% critical value
}

TEST_CASE("profile text round trip is exact")
{
    std::mt19937_64 rng = make_rng(77);
    const RisProfile w = random_profile(6, 4, rng);
    save_profile_text(w, "test_profile.txt");
    const RisProfile r = load_profile_text("test_profile.txt");
    CHECK((r.w - w.w).norm() == 0.0);
    std::remove("test_profile.txt");
}
