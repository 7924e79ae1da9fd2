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

#include "risloc/ulris.hpp"

#include <algorithm>
#include <cmath>

#include "risloc/coarse.hpp"
#include "risloc/geometry.hpp"
#include "risloc/refine.hpp"

namespace risloc
{

std::vector<RisLayout> partition_ris(const RisLayout &layout, int l1, int l2)
{
    if (l1 < 1 || l2 < 1)
        throw std::invalid_argument("partition_ris: split counts must be >= 1");
    if (layout.n_x % l1 != 0 || layout.n_z % l2 != 0)
        throw std::invalid_argument("partition_ris: layout not divisible by the split");

    const int nx_sub = layout.n_x / l1;
    const int nz_sub = layout.n_z / l2;
    std::vector<RisLayout> tiles;
    tiles.reserve(static_cast<size_t>(l1) * l2);
    for (int a = 0; a < l1; ++a)
        for (int b = 0; b < l2; ++b)
        {
            // Tile centroid in the parent grid coordinates.
            const double cx = (a * nx_sub + 0.5 * (nx_sub - 1) - 0.5 * (layout.n_x - 1)) * layout.spacing;
            const double cz = (b * nz_sub + 0.5 * (nz_sub - 1) - 0.5 * (layout.n_z - 1)) * layout.spacing;
            tiles.push_back(RisLayout::regular(layout.center + Vec3(cx, 0.0, cz), nx_sub, nz_sub,
                                               layout.spacing));
        }
    return tiles;
}

CMat make_orthogonal_G(int h, int l)
{
    if (h < l || l < 1)
        throw std::invalid_argument("make_orthogonal_G: need H >= L >= 1");
    CMat g(h, l);
    for (int row = 0; row < h; ++row)
        for (int col = 0; col < l; ++col)
            g(row, col) = std::polar(1.0, -2.0 * kPi * row * col / h);
    return g;
}

SubRisPlan build_subris_plan(const ScenarioConfig &cfg, const EstimatorOptions &opt,
                             std::mt19937_64 &rng)
{
    SubRisPlan plan;
    plan.l1 = opt.ul_l1;
    plan.l2 = opt.ul_l2;
    plan.full_layout = cfg.layout;
    plan.sub_layouts = partition_ris(cfg.layout, plan.l1, plan.l2);
    const int l = plan.n_sub();
    plan.h = (opt.ul_h > 0) ? opt.ul_h : l;
    if (cfg.n_symbols % plan.h != 0)
        throw std::invalid_argument("build_subris_plan: T not divisible by H");
    const int t_blk = cfg.n_symbols / plan.h;
    int t1 = opt.ul_t1, t2 = opt.ul_t2;
    if (t1 <= 0 || t2 <= 0)
        std::tie(t1, t2) = near_square_split(t_blk);
    if (t1 * t2 != t_blk)
        throw std::invalid_argument("build_subris_plan: ul_t1 * ul_t2 must equal T / H");

    plan.g = make_orthogonal_G(plan.h, l);

    const int nx_sub = cfg.layout.n_x / plan.l1;
    const int nz_sub = cfg.layout.n_z / plan.l2;
    plan.element_index.resize(l);
    plan.sub_profiles.reserve(l);
    for (int a = 0; a < plan.l1; ++a)
        for (int b = 0; b < plan.l2; ++b)
        {
            const int tile = a * plan.l2 + b;
            auto &map = plan.element_index[tile];
            map.resize(static_cast<size_t>(nx_sub) * nz_sub);
            for (int ix = 0; ix < nx_sub; ++ix)
                for (int iz = 0; iz < nz_sub; ++iz)
                    map[ix * nz_sub + iz] = (a * nx_sub + ix) * cfg.layout.n_z + (b * nz_sub + iz);
            plan.sub_profiles.push_back(build_kronecker_profile(nx_sub, nz_sub, t1, t2, rng));
        }
    return plan;
}

RisProfile assemble_ul_profile(const SubRisPlan &plan)
{
    const int t_blk = plan.t_block();
    RisProfile out;
    out.w.resize(plan.full_layout.size(), plan.h * t_blk);
    for (int l = 0; l < plan.n_sub(); ++l)
    {
        const CMat w_l = plan.sub_profiles[l].assemble();
        for (int blk = 0; blk < plan.h; ++blk)
            for (int r = 0; r < w_l.rows(); ++r)
                out.w.row(plan.element_index[l][r]).segment(static_cast<Eigen::Index>(blk) * t_blk, t_blk) =
                    plan.g(blk, l) * w_l.row(r);
    }
    return out;
}

std::vector<CMat> separate_subris_signal(const CMat &y, const SubRisPlan &plan)
{
    const int t_blk = plan.t_block();
    if (y.cols() != static_cast<Eigen::Index>(plan.h) * t_blk)
        throw std::invalid_argument("separate_subris_signal: Y columns mismatch the plan");
    std::vector<CMat> out(plan.n_sub());
    for (int l = 0; l < plan.n_sub(); ++l)
    {
        CMat acc = CMat::Zero(y.rows(), t_blk);
        for (int blk = 0; blk < plan.h; ++blk)
            acc.noalias() += std::conj(plan.g(blk, l)) * y.middleCols(static_cast<Eigen::Index>(blk) * t_blk, t_blk);
        out[l] = acc / static_cast<double>(plan.h);
    }
    return out;
}

Vec3 triangulate_ls(const std::vector<double> &phi_el, const std::vector<double> &phi_az,
                    const std::vector<Vec3> &centers)
{
    if (phi_el.size() < 2 || phi_el.size() != phi_az.size() || phi_el.size() != centers.size())
        throw std::invalid_argument("triangulate_ls: need at least two consistent bearings");

    RMat sum_e = RMat::Zero(3, 3);
    Vec3 rhs = Vec3::Zero();
    for (size_t l = 0; l < centers.size(); ++l)
    {
        const Vec3 k = bearing(phi_el[l], phi_az[l]);
        const RMat e = RMat::Identity(3, 3) - k * k.transpose();
        sum_e += e;
        rhs += e * centers[l];
    }
    Eigen::SelfAdjointEigenSolver<RMat> eig(sum_e);
    if (eig.eigenvalues().minCoeff() < 1e-9 * eig.eigenvalues().maxCoeff())
        throw DegenerateGeometryError("triangulate_ls: bearings are parallel");
    return sum_e.ldlt().solve(rhs);
}

double ulris_coarse_clock(const std::vector<double> &tau_hats, const Vec3 &p0_hat,
                          const ScenarioConfig &cfg)
{
    if (tau_hats.empty())
        throw std::invalid_argument("ulris_coarse_clock: no ToA estimates");
    double mean_tau = 0.0;
    for (double t : tau_hats)
        mean_tau += t;
    mean_tau /= static_cast<double>(tau_hats.size());
    const double d_b = (cfg.p_ris - cfg.p_bs).norm();
    return mean_tau - ((p0_hat - cfg.p_ris).norm() + d_b) / kSpeedOfLight;
}

UlrisEstimate ulris_estimate(const CMat &y, const SubRisPlan &plan, const ScenarioConfig &cfg,
                             const EstimatorOptions &opt, int n_paths)
{
    const std::vector<CMat> y_sub = separate_subris_signal(y, plan);

    // Per-tile coarse ToA/AoD, each sorted by ToA so path j lines up
    // across tiles (the LoS is always the earliest arrival).
    struct TilePaths
    {
        int tile;
        std::vector<PathAngles> paths;
    };
    std::vector<TilePaths> per_tile;
    CpdOmpOptions omp_opt;
    omp_opt.n_paths = n_paths;
    omp_opt.delta = opt.remark1_delta_scale * cfg.n_subcarriers * plan.t_block() * cfg.noise_var /
                    plan.h; // separation averages H blocks
    omp_opt.omega_grid = opt.omega_grid;
    omp_opt.omega_refine_tol = opt.omega_refine_tol;
    for (int l = 0; l < plan.n_sub(); ++l)
    {
        const CoarseModel model = CoarseModel::from(cfg, plan.sub_layouts[l]);
        const CpdOmpResult omp = cpd_omp(y_sub[l], plan.sub_profiles[l], model, omp_opt);
        TilePaths tp;
        tp.tile = l;
        for (const CoarsePath &p : omp.paths)
            if (p.feasible)
                tp.paths.push_back(p.geo);
        std::sort(tp.paths.begin(), tp.paths.end(),
                  [](const PathAngles &a, const PathAngles &b) { return a.tau < b.tau; });
        if (!tp.paths.empty())
            per_tile.push_back(tp);
    }
    if (per_tile.size() < 2)
        throw std::runtime_error("ulris_estimate: fewer than two tiles produced feasible paths");

    size_t common = per_tile[0].paths.size();
    for (const TilePaths &tp : per_tile)
        common = std::min(common, tp.paths.size());
    if (common == 0)
        throw std::runtime_error("ulris_estimate: no common path across tiles");

    // Triangulate each associated path and average its ToA.
    std::vector<Vec3> positions(common);
    std::vector<double> taus(common);
    for (size_t j = 0; j < common; ++j)
    {
        std::vector<double> els, azs, tile_taus;
        std::vector<Vec3> centers;
        for (const TilePaths &tp : per_tile)
        {
            els.push_back(tp.paths[j].phi_el);
            azs.push_back(tp.paths[j].phi_az);
            tile_taus.push_back(tp.paths[j].tau);
            centers.push_back(plan.sub_layouts[tp.tile].center);
        }
        positions[j] = triangulate_ls(els, azs, centers);
        taus[j] = 0.0;
        for (double t : tile_taus)
            taus[j] += t;
        taus[j] /= static_cast<double>(tile_taus.size());
    }

    UlrisEstimate out;
    // The earliest average ToA is the LoS/UE path.
    std::vector<size_t> order(common);
    for (size_t j = 0; j < common; ++j)
        order[j] = j;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return taus[a] < taus[b]; });

    const Vec3 p0 = positions[order[0]];
    std::vector<double> los_taus;
    for (const TilePaths &tp : per_tile)
        los_taus.push_back(tp.paths[order[0]].tau);
    const double delta_c = ulris_coarse_clock(los_taus, p0, cfg);

    out.coarse_solution.p0_hat = p0;
    out.coarse_solution.delta_hat = delta_c;
    out.coarse_solution.used_paths.insert(0);

    // Coarse eta from the triangulated geometry (global RIS center).
    const double d_b = (cfg.p_ris - cfg.p_bs).norm();
    std::vector<Vec3> path_positions;
    std::vector<double> w1s;
    ChannelParams coarse;
    for (size_t rank = 0; rank < common; ++rank)
    {
        const Vec3 &p = positions[order[rank]];
        const Spherical sph = spherical_from_position(p, cfg.p_ris);
        double tau;
        if (rank == 0)
            tau = (d_b + sph.d) / kSpeedOfLight + delta_c;
        else
            tau = (d_b + sph.d + (p0 - p).norm()) / kSpeedOfLight + delta_c;
        coarse.paths.push_back(PathParams{Cplx(0, 0), sph.phi_el, sph.phi_az, sph.d, tau});
        path_positions.push_back(p);
        w1s.push_back(-2.0 * kPi * tau * cfg.subcarrier_spacing);
        if (rank > 0)
            out.coarse_solution.scatterer_hats.push_back(p);
    }

    const RisProfile full_profile = assemble_ul_profile(plan);
    const std::vector<Cplx> gains = estimate_gains(y, w1s, path_positions, full_profile.w, cfg);
    for (size_t j = 0; j < coarse.paths.size(); ++j)
        coarse.paths[j].rho = gains[j];
    out.eta_coarse = coarse;

    SageOptions sage_opt;
    sage_opt.eps = opt.sage_eps;
    sage_opt.max_outer = opt.sage_max_outer;
    sage_opt.nm_max_evals = opt.nm_max_evals;
    sage_opt.nm_tol = opt.nm_tol;
    const SageResult sage = sage_refine(y, coarse, full_profile.w, cfg, sage_opt);
    out.eta_refined = sage.eta;
    out.sage_diverged = sage.diverged;

    out.solution = solve_position(sage.eta, full_profile.w, cfg, opt);
    return out;
}

} // namespace risloc
