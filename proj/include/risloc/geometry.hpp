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

#ifndef RISLOC_GEOMETRY_HPP
#define RISLOC_GEOMETRY_HPP

#include <utility>
#include <vector>

#include "risloc/types.hpp"

namespace risloc
{

struct Spherical
{
    double phi_el = 0.0; // rad from +z
    double phi_az = 0.0; // rad, atan2(y, x)
    double d = 0.0;      // meters
};

// Unit bearing k(phi_el, phi_az) = [sin el cos az, sin el sin az, cos el].
Vec3 bearing(double phi_el, double phi_az);

// Wrap an angle difference onto (-pi, pi].
double wrap_angle(double a);

// (phi_el, phi_az, d) of p as seen from ref. Throws DegenerateGeometryError
// when p and ref coincide.
Spherical spherical_from_position(const Vec3 &p, const Vec3 &ref);

// p = ref + d * k(phi_el, phi_az); exact inverse of spherical_from_position.
Vec3 position_from_spherical(double d, double phi_el, double phi_az, const Vec3 &ref);

// ToAs of all N_s + 1 paths including the clock offset:
//   tau_0 = (|p_R - p_B| + |p_0 - p_R|) / c + Delta
//   tau_s = (|p_R - p_B| + |p_s - p_R| + |p_0 - p_s|) / c + Delta
std::vector<double> toas_from_geometry(const ScenarioConfig &cfg);

// Fresnel near-field region (0.62 sqrt(D^3/lambda), 2 D^2/lambda) with D
// the diagonal aperture of the layout.
std::pair<double, double> fresnel_bounds(const RisLayout &layout, double lambda);

} // namespace risloc

#endif
