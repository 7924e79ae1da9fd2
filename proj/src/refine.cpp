// SPDX-License-Identifier: Apache-2.0
//
// risloc — RIS-aided near-field 3D localization and synchronization toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "risloc/refine.hpp"

#include <cmath>

#include "risloc/geometry.hpp"
#include "risloc/neldermead.hpp"
#include "risloc/steering.hpp"

namespace risloc
{

CMat path_model(const PathParams &eta_s, const CMat &w_profile, const ScenarioConfig &cfg)
{
    const Vec3 p = position_from_spherical(eta_s.d, eta_s.phi_el, eta_s.phi_az, cfg.p_ris);
    const CVec b = combined_steering_b(p, cfg.p_bs, cfg.layout, cfg.wavelength());
    const CVec c = phase_ramp(cfg.n_subcarriers, -2.0 * kPi * eta_s.tau * cfg.subcarrier_spacing);
    const Eigen::RowVectorXcd q = b.transpose() * w_profile;
    return (std::sqrt(cfg.tx_power) * eta_s.rho) * (c * q);
}

namespace
{

// Residual of one complete-data fit with the gain eliminated:
//   min_rho ||Yhat - rho G(x)||_F^2 = ||Yhat||^2 - |<G, Yhat>|^2 / ||G||^2.
// G(x) = sqrt(P) c(w1(tau)) b^T(p(d,el,az)) W, so <G, Yhat> and ||G||^2
// reduce to two GEMVs.
struct PathObjective
{
    const CMat &yhat;
    const CMat &w_profile;
    const ScenarioConfig &cfg;
    double yhat_norm2;

    // x = (phi_el, phi_az, d, tau * delta_f)
    double operator()(const RVec &x) const
    {
        const double phi_el = x[0];
        const double phi_az = x[1];
        const double d = x[2];
        const double tau = x[3] / cfg.subcarrier_spacing;
        // Out-of-domain points get a finite uphill value so the simplex
        // retreats instead of aborting.
        const double eps = 1e-9;
        if (d < eps || phi_el < eps || phi_el > kPi - eps)
        {
            double viol = 0.0;
            if (d < eps)
                viol += eps - d;
            if (phi_el < eps)
                viol += eps - phi_el;
            if (phi_el > kPi - eps)
                viol += phi_el - (kPi - eps);
            return yhat_norm2 * (2.0 + viol);
        }

        const Vec3 p = position_from_spherical(d, phi_el, phi_az, cfg.p_ris);
        const CVec b = combined_steering_b(p, cfg.p_bs, cfg.layout, cfg.wavelength());
        const CVec q = w_profile.transpose() * b;
        const CVec c = phase_ramp(cfg.n_subcarriers, -2.0 * kPi * tau * cfg.subcarrier_spacing);
        // <G, Yhat> = sqrt(P) c^H Yhat q^*; ||G||^2 = P N ||q||^2
        const Cplx inner = std::sqrt(cfg.tx_power) * (c.adjoint() * (yhat * q.conjugate()))(0);
        const double g_norm2 = cfg.tx_power * cfg.n_subcarriers * q.squaredNorm();
        if (g_norm2 <= 0.0)
            return yhat_norm2;
        return yhat_norm2 - std::norm(inner) / g_norm2;
    }

    Cplx gain_at(const RVec &x) const
    {
        const double tau = x[3] / cfg.subcarrier_spacing;
        const Vec3 p = position_from_spherical(x[2], x[0], x[1], cfg.p_ris);
        const CVec b = combined_steering_b(p, cfg.p_bs, cfg.layout, cfg.wavelength());
        const CVec q = w_profile.transpose() * b;
        const CVec c = phase_ramp(cfg.n_subcarriers, -2.0 * kPi * tau * cfg.subcarrier_spacing);
        const Cplx inner = std::sqrt(cfg.tx_power) * (c.adjoint() * (yhat * q.conjugate()))(0);
        const double g_norm2 = cfg.tx_power * cfg.n_subcarriers * q.squaredNorm();
        return inner / g_norm2; // rho = <G, Yhat> / ||G||^2
    }
};

RVec pack(const PathParams &p, double delta_f)
{
    RVec x(4);
    x << p.phi_el, p.phi_az, p.d, p.tau * delta_f;
    return x;
}

} // namespace

SageResult sage_refine(const CMat &y, const ChannelParams &eta_coarse, const CMat &w_profile,
                       const ScenarioConfig &cfg, const SageOptions &opt)
{
    const int n_paths = eta_coarse.n_paths();
    if (n_paths < 1)
        throw std::invalid_argument("sage_refine: empty coarse estimate");

    const double delta_f = cfg.subcarrier_spacing;
    SageResult res;
    res.eta = eta_coarse;

    std::vector<CMat> gammas(n_paths);
    for (int s = 0; s < n_paths; ++s)
        gammas[s] = path_model(res.eta.paths[s], w_profile, cfg);

    auto total_residual = [&]() {
        CMat r = y;
        for (const CMat &g : gammas)
            r -= g;
        return r.norm();
    };
    const double initial_residual = total_residual();

    NelderMeadOptions nm_opt;
    nm_opt.tol = opt.nm_tol;
    nm_opt.max_evals = opt.nm_max_evals;

    for (int outer = 0; outer < opt.max_outer; ++outer)
    {
        res.outer_iterations = outer + 1;
        const RVec before = res.eta.flatten();

        for (int s = 0; s < n_paths; ++s)
        {
            CMat yhat = y;
            for (int s2 = 0; s2 < n_paths; ++s2)
                if (s2 != s)
                    yhat -= gammas[s2];

            PathObjective obj{yhat, w_profile, cfg, yhat.squaredNorm()};
            const RVec x0 = pack(res.eta.paths[s], delta_f);
            RVec step(4);
            step << std::max(0.01 * std::abs(x0[0]), 1e-3), std::max(0.01 * std::abs(x0[1]), 1e-3),
                std::max(0.01 * std::abs(x0[2]), 1e-2), std::max(0.01 * std::abs(x0[3]), 0.05);
            const NelderMeadResult nm = nelder_mead([&](const RVec &x) { return obj(x); }, x0, step, nm_opt);

            PathParams refined;
            refined.phi_el = nm.x[0];
            refined.phi_az = nm.x[1];
            refined.d = nm.x[2];
            refined.tau = nm.x[3] / delta_f;
            refined.rho = obj.gain_at(nm.x);
            res.eta.paths[s] = refined;
            gammas[s] = path_model(refined, w_profile, cfg);
        }

        // Scaled parameter change: tau in delta_f units, everything else raw.
        RVec after = res.eta.flatten();
        RVec diff = after - before;
        for (int s = 0; s < n_paths; ++s)
            diff[6 * s + 5] *= delta_f;
        if (diff.norm() <= opt.eps)
        {
            res.converged = true;
            break;
        }
    }

    res.residual = total_residual();
    // The inner objective is evaluated in expanded form, so its values
    // carry sqrt(eps)-level noise relative to ||Y||; only count a clear
    // increase as divergence.
    if (res.residual > initial_residual * (1.0 + 1e-9) + 1e-7 * y.norm())
    {
        res.diverged = true;
        res.eta = eta_coarse;
        res.residual = initial_residual;
    }
    return res;
}

} // namespace risloc
