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

#ifndef RISLOC_PHASE_OPT_HPP
#define RISLOC_PHASE_OPT_HPP

#include <random>
#include <string>

#include "risloc/config.hpp"
#include "risloc/types.hpp"

namespace risloc
{

// K_s[n] = [b, db/d el, db/d az, db/d d] * sqrt(P) * (4x6 coefficient
// block), the factorization of the per-path observation derivative
// through the profile. n is 0-based.
CMat k_matrix(const PathParams &eta_s, int n, const ScenarioConfig &cfg);

// Per-path derivative basis B_s = [b, db/del, db/daz, db/dd] stacked over
// paths: N_R x 4(N_s+1).
CMat basis_b(const ChannelParams &eta, const ScenarioConfig &cfg);

// Everything the covariance-domain FIM needs, precomputed once per prior.
struct PhaseOptContext
{
    CMat basis;              // B
    std::vector<CMat> coeff; // sqrt(P) C[n]: 4(Ns+1) x 6(Ns+1), block diagonal
    RMat jac_reduced;        // first 3 Ns + 4 rows of the position Jacobian
    double sigma2 = 0.0;
    double profile_diag_target = 0.0; // T

    // F(eta_bar_p) from S = B^H Lambda^* B.
    RMat fim_reduced_from_gram(const CMat &s_mat) const;
};

PhaseOptContext make_phase_context(const ChannelParams &prior, const ScenarioConfig &cfg,
                                   int n_symbols);

// Reduced position-domain FIM (2/sigma^2) sum_n Jr Re{K^H[n] Lambda^* K[n]} Jr^T.
RMat fim_from_covariance(const ChannelParams &prior, const CMat &lambda,
                         const ScenarioConfig &cfg, int n_symbols);

// sqrt of the UE-position block of the inverse reduced FIM.
double peb_from_reduced_fim(const RMat &fim);
double peb_for_profile(const ChannelParams &prior, const CMat &w_profile,
                       const ScenarioConfig &cfg);

struct SdpOptions
{
    double gamma = 0.0; // 0 = 1e2 / T
    int max_iters = 5000;
    double step0 = 0.5; // normalized initial subgradient step
};

struct SdpSolution
{
    CMat xi;         // PSD, 4(Ns+1) square (joint) or 4x4 (per path)
    CMat lambda;     // (B Xi B^H)^*
    double objective = 0.0;
    bool fallback = false; // solver diverged; uniform Xi returned
};

// Joint covariance design: projected-subgradient descent on
// PEB^2(Xi) + gamma ||diag(Lambda) - T|| over PSD Xi.
SdpSolution solve_reduced_sdp(const ChannelParams &prior, const ScenarioConfig &cfg,
                              int n_symbols, const SdpOptions &opt = {});

struct BlockdiagSolution
{
    std::vector<CMat> xi_s; // 4x4 blocks
    RVec weights;           // lambda_s >= 0
    CMat lambda;            // sum_s weights[s] * Lambda_s
    double objective = 0.0;
    bool fallback = false;
};

// Per-path decoupled design plus the nonnegative mixing-weight program.
BlockdiagSolution solve_blockdiag(const ChannelParams &prior, const ScenarioConfig &cfg,
                                  int n_symbols, const SdpOptions &opt = {});

// Rank-truncated square root U_r Sigma_r^{1/2} of a Hermitian PSD matrix;
// candidates F R with R ~ CN(0, I) have covariance Lambda.
CMat covariance_factor(const CMat &lambda);

// Unit-modulus profiles from a covariance: eigendecompose Lambda, draw
// Gaussian candidates W~ = U Sigma^{1/2} R, phase-project after dividing
// by the bottom-right reference entry, keep the candidate with the
// smallest PEB on the prior scenario.
RisProfile gaussian_randomization(const CMat &lambda, int n_symbols, int n_draws,
                                  const ChannelParams &prior, const ScenarioConfig &cfg,
                                  std::mt19937_64 &rng);

// One complex entry per whitespace-separated token, "(re,im)" format.
void save_profile_text(const RisProfile &profile, const std::string &path);
RisProfile load_profile_text(const std::string &path);

} // namespace risloc

#endif
