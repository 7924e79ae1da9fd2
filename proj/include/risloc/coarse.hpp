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

#ifndef RISLOC_COARSE_HPP
#define RISLOC_COARSE_HPP

#include "risloc/config.hpp"
#include "risloc/tensor_cpd.hpp"
#include "risloc/types.hpp"

namespace risloc
{

// Everything the far-field frequency model needs: the (known) BS angles
// seen from the steering reference point, plus carrier and grid scalars.
// For a sub-RIS the reference point is the tile center.
struct CoarseModel
{
    double theta_el = 0.0;
    double theta_az = 0.0;
    double lambda = 0.0;
    double spacing = 0.0;
    double delta_f = 0.0;

    static CoarseModel from(const ScenarioConfig &cfg, const RisLayout &layout);

    // Forward maps: mode frequencies of a path at the given AoD.
    double omega1(double tau) const { return -2.0 * kPi * tau * delta_f; }
    double omega2(double phi_el, double phi_az) const;
    double omega3(double phi_el) const;
};

struct ModeFit
{
    Cplx alpha{0.0, 0.0};
    double omega = 0.0;
};

// 1D fit of u ~ alpha r_mode(omega): dense grid on (-pi, pi] followed by
// golden-section refinement. mode 1 uses c^(N); modes 2 and 3 use the
// profile factors T1^T c^(N_x) and T2^T c^(N_z).
ModeFit fit_mode_frequency(const CVec &u, int mode, int n_subcarriers,
                           const KroneckerProfile &profile, int grid = 4096,
                           double refine_tol = 1e-8);

struct PathAngles
{
    double tau = 0.0;
    double phi_el = 0.0;
    double phi_az = 0.0;
};

// Invert the frequency maps. Throws InfeasibleFrequencyError when an
// implied direction cosine is out of range; the azimuth sign is resolved
// to the y >= 0 half-space the RIS radiates into.
PathAngles frequencies_to_geometry(double w1, double w2, double w3, const CoarseModel &model);

struct CoarsePath
{
    PathAngles geo;
    double w1 = 0.0, w2 = 0.0, w3 = 0.0;
    Cplx alpha1{0.0, 0.0}; // mode-1 factor amplitude
    double removed_energy = 0.0;
    bool feasible = true;
};

struct CpdOmpOptions
{
    int n_paths = -1;     // known path count; -1 = stop on residual threshold
    double delta = 0.0;   // residual-energy drop threshold (Remark 1)
    int max_paths = 8;    // hard cap when n_paths is unknown
    int cpd_max_iter = 200;
    double cpd_tol = 1e-8;
    int omega_grid = 4096;
    double omega_refine_tol = 1e-8;
};

struct CpdOmpResult
{
    std::vector<CoarsePath> paths;          // extraction (dominance) order
    std::vector<double> residual_energy;    // after each deflation
    bool cpd_warning = false;               // some CPD did not converge
};

// Algorithm: per path, rank-1 CPD of the residual tensor, three 1D
// frequency fits, map to (tau, phi_el, phi_az), then deflate the fitted
// rank-1 component by orthogonal projection.
CpdOmpResult cpd_omp(const CMat &y, const KroneckerProfile &profile,
                     const CoarseModel &model, const CpdOmpOptions &opt);

struct DistanceGrid
{
    std::vector<double> samples; // strictly increasing, meters

    static DistanceGrid uniform(double lo, double hi, int count);
    // Default grid: `count` points on [max(0.5, fresnel lo), min(15, fresnel hi)].
    static DistanceGrid for_scenario(const ScenarioConfig &cfg, const EstimatorOptions &opt);
    int size() const { return static_cast<int>(samples.size()); }
};

// Near-field distance dictionary of one path: column m is
// vec(r_1(w1) b^T(p(d_m, el, az)) W), vectorized row-major (subcarrier
// index fastest) to match the project-wide tensor unfolding.
CMat build_distance_dictionary(double w1_hat, double phi_el_hat, double phi_az_hat,
                               const DistanceGrid &grid, const CMat &w_profile,
                               const ScenarioConfig &cfg);

struct LassoOptions
{
    double xi = 0.0;      // absolute regularizer; 0 = xi_scale * ||D^H y||_inf
    double xi_scale = 0.1;
    int max_iters = 500;
    double tol = 1e-6;
};

struct LassoResult
{
    std::vector<double> d_hat;  // per-path distance (largest |coef| in block)
    RVec coeff_abs;             // |zeta| over the stacked grid
    double xi = 0.0;
    int iterations = 0;
    std::vector<double> objective; // penalized objective per iteration
};

// Joint LASSO over the concatenated per-path dictionaries, solved by
// proximal gradient (ISTA) on the Gram system. Throws
// std::runtime_error when the solution is identically zero.
LassoResult lasso_distances(const CVec &y, const std::vector<CMat> &dicts,
                            const DistanceGrid &grid, const LassoOptions &opt);

// Same solver on a precomputed Gram system G = D^H D, h = D^H y.
LassoResult lasso_gram(const CMat &gram, const CVec &h, double y_norm2, int n_blocks,
                       const DistanceGrid &grid, const LassoOptions &opt);

// Build the Gram system without materializing the dictionary, using
// G[(s,m),(s',m')] = (r_1(w1_s)^H r_1(w1_s')) (W^T b_m)^H (W^T b_m').
void build_lasso_gram(const CMat &y, const std::vector<CoarsePath> &paths,
                      const DistanceGrid &grid, const CMat &w_profile,
                      const ScenarioConfig &cfg, CMat &gram_out, CVec &h_out);

// Gain LS from Eq. of the coarse stage: rho_s = c(w1_s)^+ [Y Q^+]_{:,s}
// with Q = sqrt(P) B^T W. Throws DegenerateGeometryError when Q is
// rank-deficient.
std::vector<Cplx> estimate_gains(const CMat &y, const std::vector<double> &w1_hats,
                                 const std::vector<Vec3> &positions, const CMat &w_profile,
                                 const ScenarioConfig &cfg);

struct CoarseEstimate
{
    ChannelParams eta;       // LoS first (smallest ToA)
    CpdOmpResult omp;
    LassoResult lasso;
};

// Full stage-1 driver: CPD-OMP, distance LASSO, gain LS. n_paths < 0
// switches to the residual-threshold stopping rule.
CoarseEstimate coarse_estimate(const CMat &y, const KroneckerProfile &profile,
                               const ScenarioConfig &cfg, const EstimatorOptions &opt,
                               int n_paths);

} // namespace risloc

#endif
