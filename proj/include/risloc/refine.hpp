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

#ifndef RISLOC_REFINE_HPP
#define RISLOC_REFINE_HPP

#include "risloc/config.hpp"
#include "risloc/types.hpp"

namespace risloc
{

// Exact noise-free single-path response
//   Gamma_s = sqrt(P) rho_s c^(N)(w_s) b^T(p(d, el, az)) W
// under the near-field steering model.
CMat path_model(const PathParams &eta_s, const CMat &w_profile, const ScenarioConfig &cfg);

struct SageOptions
{
    double eps = 1e-6;   // stop when the scaled parameter change drops below this
    int max_outer = 20;
    int nm_max_evals = 800;
    double nm_tol = 1e-10;
};

struct SageResult
{
    ChannelParams eta;
    double residual = 0.0;  // ||Y - sum_s Gamma_s||_F at return
    int outer_iterations = 0;
    bool converged = false;
    bool diverged = false;  // objective got worse; coarse estimate returned
};

// Space-alternating ML refinement: per path, subtract every other path at
// its freshest estimate and re-fit (phi_el, phi_az, d, tau) by Nelder-Mead
// with the gain eliminated in closed form (the model is linear in rho).
// tau is scaled by the subcarrier spacing inside the search so all four
// coordinates are O(1).
SageResult sage_refine(const CMat &y, const ChannelParams &eta_coarse, const CMat &w_profile,
                       const ScenarioConfig &cfg, const SageOptions &opt = {});

} // namespace risloc

#endif
