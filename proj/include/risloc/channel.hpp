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

#ifndef RISLOC_CHANNEL_HPP
#define RISLOC_CHANNEL_HPP

#include <random>

#include "risloc/types.hpp"

namespace risloc
{

// Cascaded path gains rho_s = rho_BR * rho_RU,s with free-space magnitudes
// lambda/(4 pi d) and phases drawn i.i.d. from U(0, 2 pi). Scatterer paths
// carry the reflection loss kappa and the detour length d_s + |p_0 - p_s|.
std::vector<Cplx> synthesize_gains(const ScenarioConfig &cfg, std::mt19937_64 &rng);

// Ground-truth channel parameter vector eta for the configured geometry,
// ordered LoS first.
ChannelParams channel_from_geometry(const ScenarioConfig &cfg, const std::vector<Cplx> &gains);

enum class SteeringModel
{
    NearField, // exact spherical-wavefront model
    FarField   // plane-wave approximation (both cascade factors)
};

// Forward synthesizer: Y = sqrt(P) sum_s rho_s c^(N)(w_s) b^T(p_s) W (+ Z).
// Noise is i.i.d. circular Gaussian with per-entry variance sigma^2.
ReceivedSignal synthesize_received(const ScenarioConfig &cfg, const ChannelParams &eta,
                                   const RisProfile &profile, bool add_noise, std::mt19937_64 &rng,
                                   SteeringModel model = SteeringModel::NearField);

// sum |mu|^2 / (sigma^2 N T), in dB.
double snr_empirical_db(const CMat &y_noiseless, double sigma2);

// Noise variance that realizes a target empirical SNR for a given
// noise-free observation.
double noise_var_for_snr_db(const CMat &y_noiseless, double snr_db);

// Dense unit-modulus profile with i.i.d. uniform phases (no Kronecker
// structure; usable for bound evaluation and synthesis only).
RisProfile random_profile(int n_elements, int n_symbols, std::mt19937_64 &rng);

} // namespace risloc

#endif
