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

#ifndef RISLOC_CRB_HPP
#define RISLOC_CRB_HPP

#include "risloc/types.hpp"

namespace risloc
{

// Position-domain parameter vector eta_p = [p^T, Delta, Re(rho)^T, Im(rho)^T].
struct PositionEta
{
    std::vector<Vec3> positions; // p_0 (UE) then the scatterers
    double delta = 0.0;          // clock offset, seconds
    std::vector<Cplx> rho;

    int n_paths() const { return static_cast<int>(positions.size()); }
    int dim() const { return 5 * (n_paths() - 1) + 6; } // 5 N_s + 6
};

// Geometry map f: eta_p -> eta (angles/distances/ToAs plus pass-through gains).
ChannelParams channel_from_position_eta(const PositionEta &eta_p, const ScenarioConfig &cfg);
// Inverse direction used to evaluate bounds at a channel estimate:
// positions from spherical parameters, Delta from the LoS ToA.
PositionEta position_eta_from_channel(const ChannelParams &eta, const ScenarioConfig &cfg);

// Precomputed per-path profile responses so that a (t, n) observation
// derivative costs a handful of scalar products.
struct MuDerivContext
{
    double sqrt_p = 0.0;
    double delta_f = 0.0;
    std::vector<Cplx> rho;
    std::vector<double> tau;
    CMat q;     // T x S: (W^T b_s)
    CMat qd_el; // T x S: W^T db/d phi_el
    CMat qd_az;
    CMat qd_d;

    int n_paths() const { return static_cast<int>(rho.size()); }
};

MuDerivContext make_mu_context(const ChannelParams &eta, const CMat &w_profile,
                               const ScenarioConfig &cfg);

struct MuDerivs
{
    Cplx mu{0.0, 0.0};
    Eigen::RowVectorXcd d_eta; // 1 x 6(N_s+1), path-major blocks
};

// Noise-free observation mu_t[n] (0-based t, n) and its analytic partials
// with respect to every channel parameter.
MuDerivs mu_and_derivatives(const MuDerivContext &ctx, int t, int n);
MuDerivs mu_and_derivatives(const ChannelParams &eta, int t, int n, const CMat &w_profile,
                            const ScenarioConfig &cfg);

// F(eta) = (2/sigma^2) sum_t sum_n Re{ (d mu / d eta)^H (d mu / d eta) }.
RMat fim_channel(const ChannelParams &eta, const CMat &w_profile, const ScenarioConfig &cfg);

// J = d eta^T / d eta_p, rows ordered [p; Delta; Re rho; Im rho]. Throws
// DegenerateGeometryError for zenith targets or coincident points.
RMat jacobian_position(const PositionEta &eta_p, const ScenarioConfig &cfg);

// Inverse of a symmetric PSD matrix through its eigendecomposition with a
// relative eigenvalue floor; below-floor directions raise
// DegenerateGeometryError carrying an identifiability report.
RMat invert_psd(const RMat &m, double rel_floor = 1e-12, const char *what = "matrix");

struct BoundReport
{
    double peb = 0.0;     // meters
    double ceb = 0.0;     // seconds
    RVec crb_channel;     // diag of F(eta)^{-1}
    RVec crb_position;    // diag of F(eta_p)^{-1}
    double fim_min_eig = 0.0;
    double fim_max_eig = 0.0;

    std::string csv_row() const;
    static std::string csv_header();
};

BoundReport bounds(const PositionEta &eta_p, const CMat &w_profile, const ScenarioConfig &cfg);

} // namespace risloc

#endif
