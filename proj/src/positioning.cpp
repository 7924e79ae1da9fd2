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

#include "risloc/positioning.hpp"

#include <cmath>

#include "risloc/geometry.hpp"
#include "risloc/neldermead.hpp"

namespace risloc
{

PositionSolution init_solution(const ChannelParams &eta_hat, const ScenarioConfig &cfg)
{
    if (eta_hat.n_paths() < 1)
        throw std::invalid_argument("init_solution: LoS path missing");

    const double d_b = (cfg.p_ris - cfg.p_bs).norm();
    PositionSolution sol;
    const PathParams &los = eta_hat.paths[0];
    sol.p0_hat = position_from_spherical(los.d, los.phi_el, los.phi_az, cfg.p_ris);
    sol.delta_hat = los.tau - (los.d + d_b) / kSpeedOfLight;
    for (int s = 1; s < eta_hat.n_paths(); ++s)
    {
        const PathParams &p = eta_hat.paths[s];
        sol.scatterer_hats.push_back(position_from_spherical(p.d, p.phi_el, p.phi_az, cfg.p_ris));
    }
    for (int s = 0; s < eta_hat.n_paths(); ++s)
        sol.used_paths.insert(s);
    return sol;
}

std::set<int> filter_paths(const ChannelParams &eta_hat, const PositionSolution &init,
                           const ScenarioConfig &cfg, double threshold)
{
    const double d_b = (cfg.p_ris - cfg.p_bs).norm();
    std::set<int> kept;
    kept.insert(0);
    for (size_t s = 1; s < eta_hat.paths.size(); ++s)
    {
        const PathParams &p = eta_hat.paths[s];
        const Vec3 &ps = init.scatterer_hats[s - 1];
        const double dist_to_ue = (ps - init.p0_hat).norm();
        const double delta_s = p.tau - (d_b + p.d + dist_to_ue) / kSpeedOfLight;
        if (std::abs(delta_s - init.delta_hat) <= threshold)
            kept.insert(static_cast<int>(s));
    }
    return kept;
}

PositionSolution exip_wls(const ChannelParams &eta_hat, const RMat &fim,
                          const PositionSolution &init, const ScenarioConfig &cfg,
                          const ExipOptions &opt)
{
    const int n_paths = eta_hat.n_paths();
    const RVec target = eta_hat.flatten();

    // Weight matrix; identity fallback when the FIM is unusable.
    RMat weight = fim;
    {
        Eigen::SelfAdjointEigenSolver<RMat> eig(weight);
        if (!(eig.eigenvalues().minCoeff() > -1e-9 * std::abs(eig.eigenvalues().maxCoeff())) ||
            !(eig.eigenvalues().maxCoeff() > 0.0))
            weight = RMat::Identity(target.size(), target.size());
    }

    // Optimization variables: p_0, then each used scatterer, then c * Delta
    // (meters across the board for conditioning).
    std::vector<int> used;
    for (int s : init.used_paths)
        if (s == 0 || s <= static_cast<int>(init.scatterer_hats.size()))
            used.push_back(s);
    const int n_used = static_cast<int>(used.size());
    const int dim = 3 * n_used + 1;

    const double d_b = (cfg.p_ris - cfg.p_bs).norm();

    auto unpack = [&](const RVec &x, PositionSolution &sol) {
        int k = 0;
        for (int s : used)
        {
            const Vec3 p(x[3 * k], x[3 * k + 1], x[3 * k + 2]);
            if (s == 0)
                sol.p0_hat = p;
            else
                sol.scatterer_hats[s - 1] = p;
            ++k;
        }
        sol.delta_hat = x[dim - 1] / kSpeedOfLight;
    };

    auto objective = [&](const RVec &x) {
        PositionSolution sol = init;
        unpack(x, sol);
        // Residual eta_hat - f(eta_p); gain coordinates are zero by
        // construction, excluded paths contribute nothing.
        RVec resid = RVec::Zero(target.size());
        for (int s : used)
        {
            const Vec3 &p = (s == 0) ? sol.p0_hat : sol.scatterer_hats[s - 1];
            Spherical sph;
            try
            {
                sph = spherical_from_position(p, cfg.p_ris);
            }
            catch (const DegenerateGeometryError &)
            {
                return 1e30 * (1.0 + x.squaredNorm());
            }
            double tau;
            if (s == 0)
                tau = (d_b + sph.d) / kSpeedOfLight + sol.delta_hat;
            else
                tau = (d_b + sph.d + (sol.p0_hat - p).norm()) / kSpeedOfLight + sol.delta_hat;
            resid[6 * s + 2] = target[6 * s + 2] - sph.phi_el;
            resid[6 * s + 3] = wrap_angle(target[6 * s + 3] - sph.phi_az);
            resid[6 * s + 4] = target[6 * s + 4] - sph.d;
            resid[6 * s + 5] = target[6 * s + 5] - tau;
        }
        return static_cast<double>(resid.transpose() * weight * resid);
    };

    RVec x0(dim);
    {
        int k = 0;
        for (int s : used)
        {
            const Vec3 &p = (s == 0) ? init.p0_hat : init.scatterer_hats[s - 1];
            x0.segment<3>(3 * k) = p;
            ++k;
        }
        x0[dim - 1] = init.delta_hat * kSpeedOfLight;
    }

    NelderMeadOptions nm_opt;
    nm_opt.tol = opt.nm_tol;
    nm_opt.max_evals = opt.nm_max_evals;
    RVec step = RVec::Constant(dim, opt.init_step_m);
    const NelderMeadResult nm = nelder_mead(objective, x0, step, nm_opt);

    PositionSolution sol = init;
    unpack(nm.x, sol);
    sol.used_paths = std::set<int>(used.begin(), used.end());
    sol.objective = nm.value;
    return sol;
}

PositionSolution solve_position(const ChannelParams &eta_hat, const CMat &w_profile,
                                const ScenarioConfig &cfg, const EstimatorOptions &opt)
{
    const RMat fim = fim_channel(eta_hat, w_profile, cfg);
    PositionSolution init = init_solution(eta_hat, cfg);

    double threshold = opt.filter_floor_s;
    if (eta_hat.n_paths() > 1)
    {
        try
        {
            const PositionEta eta_p = position_eta_from_channel(eta_hat, cfg);
            const RMat jac = jacobian_position(eta_p, cfg);
            const RMat inv_pos = invert_psd(jac * fim * jac.transpose(), 1e-12, "solve_position");
            const int delta_idx = 3 * eta_p.n_paths();
            threshold = std::max(opt.filter_sigma * std::sqrt(inv_pos(delta_idx, delta_idx)),
                                 opt.filter_floor_s);
        }
        catch (const DegenerateGeometryError &)
        {
            // keep the floor
        }
        init.used_paths = filter_paths(eta_hat, init, cfg, threshold);
    }

    return exip_wls(eta_hat, fim, init, cfg);
}

} // namespace risloc
