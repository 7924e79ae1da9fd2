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

#ifndef RISLOC_ULRIS_HPP
#define RISLOC_ULRIS_HPP

#include <random>

#include "risloc/config.hpp"
#include "risloc/positioning.hpp"
#include "risloc/tensor_cpd.hpp"
#include "risloc/types.hpp"

namespace risloc
{

// Ultra-large-RIS operating plan: L = l1 * l2 rectangular tiles, H >= L
// transmission blocks of t_block symbols, a unit-modulus block mixing
// matrix G with (1/H) G^H G = I, and one Kronecker profile per tile.
struct SubRisPlan
{
    int l1 = 1, l2 = 1;
    int h = 1;
    RisLayout full_layout;
    std::vector<RisLayout> sub_layouts;          // tile l = a * l2 + b
    std::vector<std::vector<int>> element_index; // tile-local -> global element
    CMat g;                                      // H x L
    std::vector<KroneckerProfile> sub_profiles;

    int n_sub() const { return l1 * l2; }
    int t_block() const { return sub_profiles.empty() ? 0 : sub_profiles[0].n_symbols(); }
    int n_symbols() const { return h * t_block(); }
};

// Contiguous rectangular tiles with centers at the tile centroids.
// Throws std::invalid_argument when the grid is not divisible.
std::vector<RisLayout> partition_ris(const RisLayout &layout, int l1, int l2);

// First L columns of the H-point DFT matrix: unit-modulus entries with
// (1/H) G^H G = I exactly, which is what makes the block separation in
// separate_subris_signal exact.
CMat make_orthogonal_G(int h, int l);

SubRisPlan build_subris_plan(const ScenarioConfig &cfg, const EstimatorOptions &opt,
                             std::mt19937_64 &rng);

// Full profile: in block h, the elements of tile l transmit G(h, l) * W_l.
RisProfile assemble_ul_profile(const SubRisPlan &plan);

// Per-tile observations Y_l = (1/H) sum_h conj(G(h, l)) Y^h; exact in
// noise-free data, noise variance reduced by H.
std::vector<CMat> separate_subris_signal(const CMat &y, const SubRisPlan &plan);

// Weighted bearing intersection p = (sum_l E_l)^{-1} (sum_l E_l p_l) with
// E_l = I - k k^T. Throws DegenerateGeometryError for parallel bearings.
Vec3 triangulate_ls(const std::vector<double> &phi_el, const std::vector<double> &phi_az,
                    const std::vector<Vec3> &centers);

// Coarse clock offset: mean per-tile LoS ToA minus the geometric delay
// through the global RIS center (small documented bias from using p_R
// instead of the tile centers).
double ulris_coarse_clock(const std::vector<double> &tau_hats, const Vec3 &p0_hat,
                          const ScenarioConfig &cfg);

struct UlrisEstimate
{
    ChannelParams eta_coarse;
    ChannelParams eta_refined;
    PositionSolution coarse_solution; // triangulated seed
    PositionSolution solution;
    bool sage_diverged = false;
};

// Whole pipeline: separate, per-tile CPD-OMP, triangulate, coarse clock,
// gains, full-surface SAGE, EXIP.
UlrisEstimate ulris_estimate(const CMat &y, const SubRisPlan &plan, const ScenarioConfig &cfg,
                             const EstimatorOptions &opt, int n_paths);

} // namespace risloc

#endif
