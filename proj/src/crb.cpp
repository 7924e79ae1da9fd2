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

#include "risloc/crb.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "risloc/geometry.hpp"
#include "risloc/steering.hpp"

namespace risloc
{

ChannelParams channel_from_position_eta(const PositionEta &eta_p, const ScenarioConfig &cfg)
{
    const int n_paths = eta_p.n_paths();
    if (static_cast<int>(eta_p.rho.size()) != n_paths)
        throw std::invalid_argument("channel_from_position_eta: gain count mismatch");

    const double d_b = (cfg.p_ris - cfg.p_bs).norm();
    ChannelParams eta;
    eta.paths.resize(n_paths);
    for (int s = 0; s < n_paths; ++s)
    {
        const Spherical sph = spherical_from_position(eta_p.positions[s], cfg.p_ris);
        double tau;
        if (s == 0)
            tau = (d_b + sph.d) / kSpeedOfLight + eta_p.delta;
        else
            tau = (d_b + sph.d + (eta_p.positions[0] - eta_p.positions[s]).norm()) / kSpeedOfLight +
                  eta_p.delta;
        eta.paths[s] = PathParams{eta_p.rho[s], sph.phi_el, sph.phi_az, sph.d, tau};
    }
    return eta;
}

PositionEta position_eta_from_channel(const ChannelParams &eta, const ScenarioConfig &cfg)
{
    PositionEta out;
    const int n_paths = eta.n_paths();
    out.positions.resize(n_paths);
    out.rho.resize(n_paths);
    for (int s = 0; s < n_paths; ++s)
    {
        const PathParams &p = eta.paths[s];
        out.positions[s] = position_from_spherical(p.d, p.phi_el, p.phi_az, cfg.p_ris);
        out.rho[s] = p.rho;
    }
    const double d_b = (cfg.p_ris - cfg.p_bs).norm();
    out.delta = eta.paths[0].tau - (eta.paths[0].d + d_b) / kSpeedOfLight;
    return out;
}

MuDerivContext make_mu_context(const ChannelParams &eta, const CMat &w_profile,
                               const ScenarioConfig &cfg)
{
    const int n_paths = eta.n_paths();
    MuDerivContext ctx;
    ctx.sqrt_p = std::sqrt(cfg.tx_power);
    ctx.delta_f = cfg.subcarrier_spacing;
    ctx.rho.resize(n_paths);
    ctx.tau.resize(n_paths);
    const int t = static_cast<int>(w_profile.cols());
    ctx.q.resize(t, n_paths);
    ctx.qd_el.resize(t, n_paths);
    ctx.qd_az.resize(t, n_paths);
    ctx.qd_d.resize(t, n_paths);

    const double lambda = cfg.wavelength();
    for (int s = 0; s < n_paths; ++s)
    {
        const PathParams &p = eta.paths[s];
        ctx.rho[s] = p.rho;
        ctx.tau[s] = p.tau;
        const SteeringDerivs sd =
            combined_steering_derivs(p.d, p.phi_el, p.phi_az, cfg.p_bs, cfg.layout, lambda);
        ctx.q.col(s).noalias() = w_profile.transpose() * sd.b;
        ctx.qd_el.col(s).noalias() = w_profile.transpose() * sd.d_el;
        ctx.qd_az.col(s).noalias() = w_profile.transpose() * sd.d_az;
        ctx.qd_d.col(s).noalias() = w_profile.transpose() * sd.d_d;
    }
    return ctx;
}

MuDerivs mu_and_derivatives(const MuDerivContext &ctx, int t, int n)
{
    const int n_paths = ctx.n_paths();
    MuDerivs out;
    out.d_eta.resize(6 * n_paths);
    const Cplx j(0.0, 1.0);
    const double ang_rate = -2.0 * kPi * n * ctx.delta_f; // d(phase)/d tau at subcarrier n (0-based)
    for (int s = 0; s < n_paths; ++s)
    {
        const Cplx phase = std::polar(1.0, ang_rate * ctx.tau[s]);
        const Cplx base = ctx.sqrt_p * phase; // sqrt(P) e^{-j 2 pi tau n df}
        const Cplx term = base * ctx.rho[s] * ctx.q(t, s);
        out.mu += term;
        out.d_eta[6 * s + 0] = base * ctx.q(t, s);
        out.d_eta[6 * s + 1] = j * base * ctx.q(t, s);
        out.d_eta[6 * s + 2] = base * ctx.rho[s] * ctx.qd_el(t, s);
        out.d_eta[6 * s + 3] = base * ctx.rho[s] * ctx.qd_az(t, s);
        out.d_eta[6 * s + 4] = base * ctx.rho[s] * ctx.qd_d(t, s);
        out.d_eta[6 * s + 5] = j * ang_rate * term;
    }
    return out;
}

MuDerivs mu_and_derivatives(const ChannelParams &eta, int t, int n, const CMat &w_profile,
                            const ScenarioConfig &cfg)
{
    return mu_and_derivatives(make_mu_context(eta, w_profile, cfg), t, n);
}

RMat fim_channel(const ChannelParams &eta, const CMat &w_profile, const ScenarioConfig &cfg)
{
    const MuDerivContext ctx = make_mu_context(eta, w_profile, cfg);
    const int dim = 6 * eta.n_paths();
    CMat acc = CMat::Zero(dim, dim);
    for (int t = 0; t < w_profile.cols(); ++t)
        for (int n = 0; n < cfg.n_subcarriers; ++n)
        {
            const MuDerivs md = mu_and_derivatives(ctx, t, n);
            acc.noalias() += md.d_eta.adjoint() * md.d_eta;
        }
    return (2.0 / cfg.noise_var) * acc.real();
}

RMat jacobian_position(const PositionEta &eta_p, const ScenarioConfig &cfg)
{
    const int n_paths = eta_p.n_paths();
    const int rows = 5 * (n_paths - 1) + 6; // 3(Ns+1) + 1 + 2(Ns+1)
    const int cols = 6 * n_paths;
    RMat jac = RMat::Zero(rows, cols);

    const int delta_row = 3 * n_paths;
    const int re_row0 = delta_row + 1;
    const int im_row0 = re_row0 + n_paths;

    for (int s = 0; s < n_paths; ++s)
    {
        const Vec3 rel = eta_p.positions[s] - cfg.p_ris;
        const double d = rel.norm();
        const double rxy = std::hypot(rel.x(), rel.y());
        if (d <= 0.0)
            throw DegenerateGeometryError("jacobian_position: target coincides with the RIS center");
        if (rxy <= 0.0)
            throw DegenerateGeometryError("jacobian_position: zenith target, azimuth undefined");

        const int row_p = 3 * s;

        // d phi_el / d p_s  (phi_el = acos(z'/d))
        jac(row_p + 0, 6 * s + 2) = rel.x() * rel.z() / (rxy * d * d);
        jac(row_p + 1, 6 * s + 2) = rel.y() * rel.z() / (rxy * d * d);
        jac(row_p + 2, 6 * s + 2) = -rxy / (d * d);

        // d phi_az / d p_s  (phi_az = atan2(y', x'))
        jac(row_p + 0, 6 * s + 3) = -rel.y() / (rxy * rxy);
        jac(row_p + 1, 6 * s + 3) = rel.x() / (rxy * rxy);

        // d d_s / d p_s: unit bearing
        jac.block<3, 1>(row_p, 6 * s + 4) = rel / d;

        // ToA columns
        jac(delta_row, 6 * s + 5) = 1.0; // d tau_s / d Delta
        if (s == 0)
        {
            jac.block<3, 1>(0, 5) += rel / (kSpeedOfLight * d);
        }
        else
        {
            const Vec3 sep = eta_p.positions[0] - eta_p.positions[s];
            const double dsep = sep.norm();
            if (dsep <= 0.0)
                throw DegenerateGeometryError("jacobian_position: scatterer coincides with the UE");
            jac.block<3, 1>(0, 6 * s + 5) = sep / (kSpeedOfLight * dsep);
            jac.block<3, 1>(row_p, 6 * s + 5) =
                rel / (kSpeedOfLight * d) - sep / (kSpeedOfLight * dsep);
        }

        // Gains map through unchanged.
        jac(re_row0 + s, 6 * s + 0) = 1.0;
        jac(im_row0 + s, 6 * s + 1) = 1.0;
    }
    return jac;
}

RMat invert_psd(const RMat &m, double rel_floor, const char *what)
{
    // Equilibrate to unit diagonal first: the parameter vector mixes
    // meters, seconds and raw gains, which alone can push the condition
    // number past double precision.
    const int n = static_cast<int>(m.rows());
    RVec scale(n);
    for (int i = 0; i < n; ++i)
    {
        const double d = m(i, i);
        if (!(d > 0.0))
        {
            std::ostringstream msg;
            msg << what << ": no information about parameter " << i;
            throw DegenerateGeometryError(msg.str());
        }
        scale[i] = 1.0 / std::sqrt(d);
    }
    const RMat eq = scale.asDiagonal() * m * scale.asDiagonal();

    Eigen::SelfAdjointEigenSolver<RMat> eig(eq);
    const RVec &vals = eig.eigenvalues();
    const double lmax = vals.maxCoeff();
    const double floor = rel_floor * lmax;
    if (vals.minCoeff() < floor)
    {
        // Identifiability report: which parameters load on the null space.
        std::ostringstream msg;
        msg << what << ": singular information matrix; null-space components:";
        for (int k = 0; k < vals.size(); ++k)
        {
            if (vals[k] >= floor)
                continue;
            Eigen::Index idx = 0;
            eig.eigenvectors().col(k).cwiseAbs().maxCoeff(&idx);
            msg << " [eig " << vals[k] << " -> param " << idx << "]";
        }
        throw DegenerateGeometryError(msg.str());
    }
    const RMat inv_eq =
        eig.eigenvectors() * vals.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    return scale.asDiagonal() * inv_eq * scale.asDiagonal();
}

std::string BoundReport::csv_header() { return "peb_m,ceb_s,fim_min_eig,fim_max_eig"; }

std::string BoundReport::csv_row() const
{
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g", peb, ceb, fim_min_eig, fim_max_eig);
    return buf;
}

BoundReport bounds(const PositionEta &eta_p, const CMat &w_profile, const ScenarioConfig &cfg)
{
    const ChannelParams eta = channel_from_position_eta(eta_p, cfg);
    const RMat f_eta = fim_channel(eta, w_profile, cfg);
    const RMat jac = jacobian_position(eta_p, cfg);
    const RMat f_pos = jac * f_eta * jac.transpose();

    BoundReport rep;
    {
        Eigen::SelfAdjointEigenSolver<RMat> eig(f_pos);
        rep.fim_min_eig = eig.eigenvalues().minCoeff();
        rep.fim_max_eig = eig.eigenvalues().maxCoeff();
    }
    const RMat inv_pos = invert_psd(f_pos, 1e-12, "bounds(position FIM)");
    const RMat inv_eta = invert_psd(f_eta, 1e-12, "bounds(channel FIM)");

    rep.crb_channel = inv_eta.diagonal();
    rep.crb_position = inv_pos.diagonal();
    rep.peb = std::sqrt(inv_pos.topLeftCorner(3, 3).trace());
    const int delta_idx = 3 * eta_p.n_paths(); // zero-based position of Delta
    rep.ceb = std::sqrt(inv_pos(delta_idx, delta_idx));
    return rep;
}

} // namespace risloc
