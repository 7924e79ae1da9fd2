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

#ifndef RISLOC_STEERING_HPP
#define RISLOC_STEERING_HPP

#include "risloc/types.hpp"

namespace risloc
{

// Uniform phase ramp c^(N)(omega) = [1, e^{j w}, ..., e^{j (N-1) w}]^T.
CVec phase_ramp(int n, double omega);

// Near-field steering vector, entry r = exp(-j 2 pi (|p - p_r| - |p - center|) / lambda).
// Every entry has unit modulus.
CVec nearfield_steering(const Vec3 &p, const RisLayout &layout, double lambda);

// Far-field plane-wave approximation
//   a(el, az) = e^{j (beta_x + beta_z)} c^(N_x)(w_x) (x) c^(N_z)(w_z)
// with w_x = 2 pi sin(el) cos(az) s / lambda, w_z = 2 pi cos(el) s / lambda
// and beta_* the centering phases for element spacing s. Exact Kronecker
// structure under the x-major element order.
CVec farfield_steering(double phi_el, double phi_az, const RisLayout &layout, double lambda);

// Cascade vector b(p) = a(p) (Hadamard) a(p_bs).
CVec combined_steering_b(const Vec3 &p, const Vec3 &p_bs, const RisLayout &layout, double lambda);

// b(p(d, phi_el, phi_az)) together with its analytic partials with respect
// to (phi_el, phi_az, d), computed through the chain rule of the element
// distances in p = center + d * k(phi_el, phi_az). These are the exact
// kernels shared by the Fisher-information and phase-design code.
struct SteeringDerivs
{
    CVec b;    // N_R
    CVec d_el; // d b / d phi_el
    CVec d_az; // d b / d phi_az
    CVec d_d;  // d b / d d
};

SteeringDerivs combined_steering_derivs(double d, double phi_el, double phi_az,
                                        const Vec3 &p_bs, const RisLayout &layout, double lambda);

} // namespace risloc

#endif
