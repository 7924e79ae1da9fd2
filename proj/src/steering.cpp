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

#include "risloc/steering.hpp"

#include <cmath>

#include "risloc/geometry.hpp"

namespace risloc
{

CVec phase_ramp(int n, double omega)
{
    CVec c(n);
    for (int k = 0; k < n; ++k)
        c[k] = std::polar(1.0, omega * k);
    return c;
}

CVec nearfield_steering(const Vec3 &p, const RisLayout &layout, double lambda)
{
    const int nr = layout.size();
    const double d_ref = (p - layout.center).norm();
    const double k0 = 2.0 * kPi / lambda;
    CVec a(nr);
    for (int r = 0; r < nr; ++r)
    {
        const double dr = (p - layout.element_positions[r]).norm();
        a[r] = std::polar(1.0, -k0 * (dr - d_ref));
    }
    return a;
}

CVec farfield_steering(double phi_el, double phi_az, const RisLayout &layout, double lambda)
{
    const double s = layout.spacing;
    const double u = std::sin(phi_el) * std::cos(phi_az); // x direction cosine
    const double v = std::cos(phi_el);                    // z direction cosine
    const double w_x = 2.0 * kPi * u * s / lambda;
    const double w_z = 2.0 * kPi * v * s / lambda;
    const double beta = -kPi * s / lambda * (u * (layout.n_x - 1) + v * (layout.n_z - 1));

    const CVec cx = phase_ramp(layout.n_x, w_x);
    const CVec cz = phase_ramp(layout.n_z, w_z);
    const Cplx g = std::polar(1.0, beta);
    CVec a(layout.size());
    for (int ix = 0; ix < layout.n_x; ++ix)
        for (int iz = 0; iz < layout.n_z; ++iz)
            a[ix * layout.n_z + iz] = g * cx[ix] * cz[iz];
    return a;
}

CVec combined_steering_b(const Vec3 &p, const Vec3 &p_bs, const RisLayout &layout, double lambda)
{
    return nearfield_steering(p, layout, lambda).cwiseProduct(nearfield_steering(p_bs, layout, lambda));
}

SteeringDerivs combined_steering_derivs(double d, double phi_el, double phi_az,
                                        const Vec3 &p_bs, const RisLayout &layout, double lambda)
{
    if (d <= 0.0)
        throw std::invalid_argument("combined_steering_derivs: d must be > 0");

    const int nr = layout.size();
    const double k0 = 2.0 * kPi / lambda;
    const Vec3 k = bearing(phi_el, phi_az);
    const Vec3 p = layout.center + d * k;
    // Tangent directions of p under (phi_el, phi_az), scaled by d.
    const Vec3 dp_el = d * Vec3(std::cos(phi_el) * std::cos(phi_az),
                                std::cos(phi_el) * std::sin(phi_az),
                                -std::sin(phi_el));
    const Vec3 dp_az = d * Vec3(-std::sin(phi_el) * std::sin(phi_az),
                                std::sin(phi_el) * std::cos(phi_az),
                                0.0);

    const CVec a_bs = nearfield_steering(p_bs, layout, lambda);

    SteeringDerivs out;
    out.b.resize(nr);
    out.d_el.resize(nr);
    out.d_az.resize(nr);
    out.d_d.resize(nr);
    const Cplx j(0.0, 1.0);
    for (int r = 0; r < nr; ++r)
    {
        const Vec3 rel = p - layout.element_positions[r];
        const double dr = rel.norm();
        if (dr <= 0.0)
            throw DegenerateGeometryError("combined_steering_derivs: target on an element");
        const Vec3 u = rel / dr; // gradient of |p - p_r| w.r.t. p
        const Cplx a_r = std::polar(1.0, -k0 * (dr - d));
        const Cplx b_r = a_r * a_bs[r];
        out.b[r] = b_r;
        // |p - center| = d exactly, so its angle partials vanish and its
        // distance partial is 1.
        out.d_el[r] = b_r * (-j * k0) * u.dot(dp_el);
        out.d_az[r] = b_r * (-j * k0) * u.dot(dp_az);
        out.d_d[r] = b_r * (-j * k0) * (u.dot(k) - 1.0);
    }
    return out;
}

} // namespace risloc
