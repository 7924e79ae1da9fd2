// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <Eigen/SVD>

#include "risloc/channel.hpp"
#include "risloc/config.hpp"
#include "risloc/rng.hpp"
#include "risloc/tensor_cpd.hpp"

using namespace risloc;

namespace
{
CVec random_cvec(int n, std::mt19937_64 &rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    CVec v(n);
    for (int i = 0; i < n; ++i)
        v[i] = Cplx(g(rng), g(rng));
    return v;
}

Tensor3 rank1_tensor(const CVec &a, const CVec &b, const CVec &c)
{
    const int t1 = static_cast<int>(b.size());
    const int t2 = static_cast<int>(c.size());
    CMat m(a.size(), t1 * t2);
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < t1; ++j)
            for (int k = 0; k < t2; ++k)
                m(i, j * t2 + k) = a[i] * b[j] * c[k];
    return tensorize(m, t1, t2);
}

// angle between 1D subspaces
double subspace_angle(const CVec &u, const CVec &v)
{
    const double c = std::abs((u.adjoint() * v)(0)) / (u.norm() * v.norm());
    return std::acos(std::min(1.0, c));
}
} // namespace

TEST_CASE("kronecker profile satisfies the product identity and unit modulus")
{
    std::mt19937_64 rng = make_rng(5);
    const KroneckerProfile p = build_kronecker_profile(4, 3, 2, 5, rng);
    const CMat w = p.assemble();
    REQUIRE(w.rows() == 12);
    REQUIRE(w.cols() == 10);
    for (int ix = 0; ix < 4; ++ix)
        for (int iz = 0; iz < 3; ++iz)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 5; ++b)
                    CHECK(std::abs(w(ix * 3 + iz, a * 5 + b) - p.t1_mat(ix, a) * p.t2_mat(iz, b)) <
                          1e-15);
    for (int r = 0; r < w.rows(); ++r)
        for (int c = 0; c < w.cols(); ++c)
            CHECK(std::abs(w(r, c)) == doctest::Approx(1.0).epsilon(1e-14));

    const KroneckerProfile tiny = build_kronecker_profile(1, 1, 1, 1, rng);
    CHECK(std::abs(tiny.assemble()(0, 0)) == doctest::Approx(1.0));

    // paper-scale shape: 2304 x 256 from 48x16 and 48x16 factors
    const KroneckerProfile big = build_kronecker_profile(48, 48, 16, 16, rng);
    CHECK(big.n_elements() == 2304);
    CHECK(big.n_symbols() == 256);
}

TEST_CASE("tensorize bijection and shape checks")
{
    std::mt19937_64 rng = make_rng(6);
    CMat y(5, 12);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 12; ++c)
            y(r, c) = Cplx(std::normal_distribution<double>()(rng), 0.3);
    const Tensor3 t = tensorize(y, 3, 4);
    CHECK((untensorize(t) - y).norm() == 0.0);
    CHECK(t(2, 1, 3) == y(2, 1 * 4 + 3));
    CHECK_THROWS_AS(tensorize(y, 3, 5), std::invalid_argument);
}

TEST_CASE("single-path far-field data is exactly rank one; multipath bounded")
{
    ScenarioConfig cfg = paper_preset().scenario;
    cfg.layout = RisLayout::regular(cfg.p_ris, 8, 8, 0.5 * cfg.wavelength());
    cfg.n_subcarriers = 16;
    cfg.n_symbols = 16;
    std::mt19937_64 rng = make_rng(11);
    const KroneckerProfile kp = build_kronecker_profile(8, 8, 4, 4, rng);
    RisProfile rp;
    rp.w = kp.assemble();

    ScenarioConfig single = cfg;
    single.scatterers.clear();
    const ChannelParams eta1 = channel_from_geometry(single, {Cplx(1e-9, 2e-9)});
    const CMat y1 = synthesize_received(single, eta1, rp, false, rng, SteeringModel::FarField).y;
    const Cpd1Result cpd = rank1_cpd(tensorize(y1, 4, 4));
    CHECK(cpd.fit < 1e-10 * y1.norm());

    const ChannelParams eta2 = channel_from_geometry(cfg, {Cplx(1e-9, 2e-9), Cplx(-2e-10, 1e-10)});
    const CMat y2 = synthesize_received(cfg, eta2, rp, false, rng, SteeringModel::FarField).y;
    Eigen::JacobiSVD<CMat> svd(y2);
    CHECK(svd.singularValues()[2] < 1e-10 * svd.singularValues()[0]);
}

TEST_CASE("rank-1 ALS recovers exact factors and degrades gracefully")
{
    std::mt19937_64 rng = make_rng(12);
    const CVec a = random_cvec(10, rng), b = random_cvec(6, rng), c = random_cvec(5, rng);
    const Tensor3 t = rank1_tensor(a, b, c);

    const Cpd1Result res = rank1_cpd(t);
    CHECK(res.converged);
    CHECK(res.fit < 1e-10 * t.m1.norm());
    CHECK(subspace_angle(res.u1, a) < 1e-7);
    CHECK(subspace_angle(res.u2, b) < 1e-7);
    CHECK(subspace_angle(res.u3, c) < 1e-7);

    // noisy copy: factor subspaces within 1e-2 rad
    Tensor3 noisy = t;
    const double scale = 1e-3 * t.m1.norm() / std::sqrt(static_cast<double>(t.m1.size()));
    std::normal_distribution<double> g(0.0, scale);
    for (int i = 0; i < noisy.m1.rows(); ++i)
        for (int j = 0; j < noisy.m1.cols(); ++j)
            noisy.m1(i, j) += Cplx(g(rng), g(rng));
    const Cpd1Result res2 = rank1_cpd(noisy);
    CHECK(subspace_angle(res2.u1, a) < 1e-2);
    CHECK(subspace_angle(res2.u2, b) < 1e-2);
    CHECK(subspace_angle(res2.u3, c) < 1e-2);

    // monotone fit
    for (size_t i = 1; i < res2.fit_history.size(); ++i)
        CHECK(res2.fit_history[i] <= res2.fit_history[i - 1] + 1e-9 * res2.fit_history[0]);

    Tensor3 zero = t;
    zero.m1.setZero();
    CHECK_THROWS_AS(rank1_cpd(zero), std::invalid_argument);
}

TEST_CASE("rank-1 factors are unique up to scale")
{
    std::mt19937_64 rng = make_rng(13);
    const CVec a = random_cvec(7, rng), b = random_cvec(4, rng), c = random_cvec(3, rng);
    const Cpd1Result res = rank1_cpd(rank1_tensor(a, b, c));
    // rebuild the tensor from the factors; scale ambiguity cancels
    const Tensor3 rebuilt = rank1_tensor(res.u1, res.u2, res.u3);
    CHECK((rebuilt.m1 - rank1_tensor(a, b, c).m1).norm() < 1e-9 * rebuilt.m1.norm());
}
