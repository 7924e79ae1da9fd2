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

#include "risloc/geometry.hpp"

#include <cmath>

namespace risloc
{

RisLayout RisLayout::regular(const Vec3 &center, int n_x, int n_z, double spacing)
{
    if (n_x < 1 || n_z < 1)
        throw std::invalid_argument("RisLayout: element counts must be >= 1");
    if (spacing < 0.0)
        throw std::invalid_argument("RisLayout: spacing must be non-negative");

    RisLayout lay;
    lay.center = center;
    lay.n_x = n_x;
    lay.n_z = n_z;
    lay.spacing = spacing;
    lay.element_positions.reserve(static_cast<size_t>(n_x) * n_z);
    const double ox = 0.5 * (n_x - 1);
    const double oz = 0.5 * (n_z - 1);
    for (int ix = 0; ix < n_x; ++ix)
        for (int iz = 0; iz < n_z; ++iz)
            lay.element_positions.push_back(center + Vec3((ix - ox) * spacing, 0.0, (iz - oz) * spacing));
    return lay;
}

double RisLayout::aperture() const
{
    const double dx = (n_x - 1) * spacing;
    const double dz = (n_z - 1) * spacing;
    return std::sqrt(dx * dx + dz * dz);
}

Vec3 bearing(double phi_el, double phi_az)
{
    const double se = std::sin(phi_el);
    return Vec3(se * std::cos(phi_az), se * std::sin(phi_az), std::cos(phi_el));
}

double wrap_angle(double a)
{
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi)
        a += 2.0 * kPi;
    return a;
}

Spherical spherical_from_position(const Vec3 &p, const Vec3 &ref)
{
    const Vec3 rel = p - ref;
    const double d = rel.norm();
    if (d <= 0.0 || !std::isfinite(d))
        throw DegenerateGeometryError("spherical_from_position: coincident points");
    Spherical s;
    s.d = d;
    s.phi_el = std::acos(rel.z() / d);
    s.phi_az = std::atan2(rel.y(), rel.x());
    return s;
}

Vec3 position_from_spherical(double d, double phi_el, double phi_az, const Vec3 &ref)
{
    if (d <= 0.0)
        throw std::invalid_argument("position_from_spherical: d must be > 0");
    return ref + d * bearing(phi_el, phi_az);
}

std::vector<double> toas_from_geometry(const ScenarioConfig &cfg)
{
    const double d_b = (cfg.p_ris - cfg.p_bs).norm();
    std::vector<double> taus;
    taus.reserve(cfg.n_paths());
    taus.push_back((d_b + (cfg.p_ue - cfg.p_ris).norm()) / kSpeedOfLight + cfg.clock_offset);
    for (const Vec3 &ps : cfg.scatterers)
    {
        const double detour = (ps - cfg.p_ris).norm() + (cfg.p_ue - ps).norm();
        taus.push_back((d_b + detour) / kSpeedOfLight + cfg.clock_offset);
    }
    return taus;
}

std::pair<double, double> fresnel_bounds(const RisLayout &layout, double lambda)
{
    const double D = layout.aperture();
    if (D <= 0.0)
        return {0.0, 0.0};
    return {0.62 * std::sqrt(D * D * D / lambda), 2.0 * D * D / lambda};
}

RVec ChannelParams::flatten() const
{
    RVec eta(6 * n_paths());
    for (int s = 0; s < n_paths(); ++s)
    {
        const PathParams &p = paths[s];
        eta.segment<6>(6 * s) << p.rho.real(), p.rho.imag(), p.phi_el, p.phi_az, p.d, p.tau;
    }
    return eta;
}

ChannelParams ChannelParams::unflatten(const RVec &eta)
{
    if (eta.size() % 6 != 0)
        throw std::invalid_argument("ChannelParams::unflatten: size must be a multiple of 6");
    ChannelParams cp;
    cp.paths.resize(eta.size() / 6);
    for (int s = 0; s < cp.n_paths(); ++s)
    {
        PathParams &p = cp.paths[s];
        p.rho = Cplx(eta[6 * s], eta[6 * s + 1]);
        p.phi_el = eta[6 * s + 2];
        p.phi_az = eta[6 * s + 3];
        p.d = eta[6 * s + 4];
        p.tau = eta[6 * s + 5];
    }
    return cp;
}

void ScenarioConfig::validate() const
{
    if (n_subcarriers < 1)
        throw std::invalid_argument("ScenarioConfig: n_subcarriers must be >= 1");
    if (n_symbols < 1)
        throw std::invalid_argument("ScenarioConfig: n_symbols must be >= 1");
    if (tx_power <= 0.0)
        throw std::invalid_argument("ScenarioConfig: tx_power must be > 0");
    if (noise_var <= 0.0)
        throw std::invalid_argument("ScenarioConfig: noise_var must be > 0");
    if (reflection_loss < 0.0 || reflection_loss > 1.0)
        throw std::invalid_argument("ScenarioConfig: reflection_loss must be in [0, 1]");
    if (f_c <= 0.0 || subcarrier_spacing <= 0.0)
        throw std::invalid_argument("ScenarioConfig: carrier and subcarrier spacing must be > 0");
    if (layout.size() < 1 || layout.element_positions.size() != static_cast<size_t>(layout.size()))
        throw std::invalid_argument("ScenarioConfig: layout element positions inconsistent");
    if (!p_bs.allFinite() || !p_ris.allFinite() || !p_ue.allFinite())
        throw std::invalid_argument("ScenarioConfig: non-finite position");
    for (const Vec3 &s : scatterers)
        if (!s.allFinite())
            throw std::invalid_argument("ScenarioConfig: non-finite scatterer position");
}

} // namespace risloc
