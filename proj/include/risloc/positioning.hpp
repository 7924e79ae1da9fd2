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

#ifndef RISLOC_POSITIONING_HPP
#define RISLOC_POSITIONING_HPP

#include <set>

#include "risloc/config.hpp"
#include "risloc/crb.hpp"
#include "risloc/types.hpp"

namespace risloc
{

struct PositionSolution
{
    Vec3 p0_hat = Vec3::Zero();
    std::vector<Vec3> scatterer_hats;
    double delta_hat = 0.0;
    std::set<int> used_paths; // always contains 0
    double objective = 0.0;   // weighted residual at the solution
};

// Spherical-to-Cartesian seed: p_s = p_R + d_s k(el, az) and
// Delta = tau_0 - (d_0 + d_B) / c.
PositionSolution init_solution(const ChannelParams &eta_hat, const ScenarioConfig &cfg);

// Multipath gate: a path survives when its implied clock offset
// Delta_s = tau_s - (d_B + d_s + |p_s - p_0|) / c stays within
// `threshold` of the LoS offset.
std::set<int> filter_paths(const ChannelParams &eta_hat, const PositionSolution &init,
                           const ScenarioConfig &cfg, double threshold);

struct ExipOptions
{
    int nm_max_evals = 6000;
    double nm_tol = 1e-10;
    double init_step_m = 0.05; // initial simplex edge, meters
};

// EXIP weighted least squares: minimize
//   [eta_hat - f(eta_p)]^T F(eta_hat) [eta_hat - f(eta_p)]
// over the positions and clock offset of the used paths (gains pass
// through with zero residual). Falls back to identity weighting when the
// supplied FIM is singular.
PositionSolution exip_wls(const ChannelParams &eta_hat, const RMat &fim,
                          const PositionSolution &init, const ScenarioConfig &cfg,
                          const ExipOptions &opt = {});

// Full conversion pipeline: FIM at the estimate, seed, Remark-2 gate with
// threshold max(filter_sigma * CEB, filter_floor_s), then the EXIP fit.
PositionSolution solve_position(const ChannelParams &eta_hat, const CMat &w_profile,
                                const ScenarioConfig &cfg, const EstimatorOptions &opt);

} // namespace risloc

#endif
