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

#ifndef RISLOC_CONFIG_HPP
#define RISLOC_CONFIG_HPP

#include <iosfwd>
#include <string>

#include "risloc/types.hpp"

namespace risloc
{

// Estimation knobs with the project-wide defaults. Every field can be
// overridden from the same key/value config file as the scenario.
struct EstimatorOptions
{
    // Kronecker split of the symbol axis (T = t1 * t2); 0 = near-square auto.
    int t1 = 0;
    int t2 = 0;

    int omega_grid = 4096;          // 1D frequency search grid on (-pi, pi]
    double omega_refine_tol = 1e-8; // golden-section width

    // Distance dictionary: uniform grid on [max(0.5, fresnel lower), min(15, fresnel upper)].
    int dist_grid_size = 200;
    double dist_grid_min = 0.0; // 0 = derive from Fresnel bounds
    double dist_grid_max = 0.0;

    double lasso_xi_scale = 0.1; // xi = scale * ||D^H y||_inf
    int lasso_max_iters = 500;
    double lasso_tol = 1e-6;

    double remark1_delta_scale = 1.5; // delta = scale * N * T * sigma^2

    double sage_eps = 1e-6;
    int sage_max_outer = 20;
    int nm_max_evals = 800;
    double nm_tol = 1e-10;

    double filter_sigma = 3.0;        // Remark-2 gate: |Delta_s - Delta| <= sigma * CEB
    double filter_floor_s = 5e-9;     // threshold floor

    // Ultra-large-RIS plan (proposed 2).
    int ul_l1 = 2;
    int ul_l2 = 2;
    int ul_h = 0; // 0 = L1 * L2
    int ul_t1 = 0;
    int ul_t2 = 0; // 0 = near-square split of T / H

    // Phase optimizer.
    double sdp_gamma = 0.0; // 0 = 1e2 / T
    int sdp_max_iters = 5000;
    int randomization_draws = 100;
};

struct FullConfig
{
    ScenarioConfig scenario;
    EstimatorOptions estimator;
};

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);

// Paper-scale default setup (48x48 RIS, N = 80, T = 256, one scatterer).
FullConfig paper_preset();
// Desk-scale preset: 24x24 RIS, everything else as the paper preset.
FullConfig desk_preset();

// Plain-text key/value config, `key = value`, '#' comments, repeated
// `scatterer` keys append. Unknown keys are an error. Prints a warning
// to warn_stream when bandwidth exceeds 5% of the carrier.
FullConfig load_config(const std::string &path, std::ostream *warn_stream = nullptr);
FullConfig parse_config(std::istream &in, std::ostream *warn_stream = nullptr);

// Near-square factorization t1 * t2 = t with t1 >= t2 maximizing t2.
std::pair<int, int> near_square_split(int t);

// Resolve the profile Kronecker split for a scenario.
std::pair<int, int> resolve_tensor_split(const ScenarioConfig &scenario, const EstimatorOptions &opt);

} // namespace risloc

#endif
