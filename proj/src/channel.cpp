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

#include "risloc/channel.hpp"

#include <cmath>

#include "risloc/geometry.hpp"
#include "risloc/steering.hpp"

namespace risloc
{

std::vector<Cplx> synthesize_gains(const ScenarioConfig &cfg, std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    const double lambda = cfg.wavelength();
    const double d_b = (cfg.p_ris - cfg.p_bs).norm();
    const Cplx rho_br = std::polar(lambda / (4.0 * kPi * d_b), phase(rng));

    std::vector<Cplx> gains;
    gains.reserve(cfg.n_paths());
    const double d0 = (cfg.p_ue - cfg.p_ris).norm();
    gains.push_back(rho_br * std::polar(lambda / (4.0 * kPi * d0), phase(rng)));
    for (const Vec3 &ps : cfg.scatterers)
    {
        const double detour = (ps - cfg.p_ris).norm() + (cfg.p_ue - ps).norm();
        const double mag = cfg.reflection_loss * lambda / (4.0 * kPi * detour);
        gains.push_back(rho_br * std::polar(mag, phase(rng)));
    }
    return gains;
}

ChannelParams channel_from_geometry(const ScenarioConfig &cfg, const std::vector<Cplx> &gains)
{
    if (gains.size() != static_cast<size_t>(cfg.n_paths()))
        throw std::invalid_argument("channel_from_geometry: gain count mismatch");

    const std::vector<double> taus = toas_from_geometry(cfg);
    ChannelParams eta;
    eta.paths.resize(cfg.n_paths());
    for (int s = 0; s < cfg.n_paths(); ++s)
    {
        const Vec3 &target = (s == 0) ? cfg.p_ue : cfg.scatterers[s - 1];
        const Spherical sph = spherical_from_position(target, cfg.p_ris);
        eta.paths[s] = PathParams{gains[s], sph.phi_el, sph.phi_az, sph.d, taus[s]};
    }
    return eta;
}

ReceivedSignal synthesize_received(const ScenarioConfig &cfg, const ChannelParams &eta,
                                   const RisProfile &profile, bool add_noise, std::mt19937_64 &rng,
                                   SteeringModel model)
{
    const int n = cfg.n_subcarriers;
    const int t = cfg.n_symbols;
    if (profile.n_elements() != cfg.layout.size() || profile.n_symbols() != t)
        throw std::invalid_argument("synthesize_received: profile dimensions mismatch");

    const double lambda = cfg.wavelength();
    const double sqrt_p = std::sqrt(cfg.tx_power);
    const Spherical bs = spherical_from_position(cfg.p_bs, cfg.p_ris);

    CMat y = CMat::Zero(n, t);
    for (const PathParams &path : eta.paths)
    {
        CVec b;
        if (model == SteeringModel::NearField)
        {
            const Vec3 p = position_from_spherical(path.d, path.phi_el, path.phi_az, cfg.p_ris);
            b = combined_steering_b(p, cfg.p_bs, cfg.layout, lambda);
        }
        else
        {
            b = farfield_steering(path.phi_el, path.phi_az, cfg.layout, lambda)
                    .cwiseProduct(farfield_steering(bs.phi_el, bs.phi_az, cfg.layout, lambda));
        }
        const double w1 = -2.0 * kPi * path.tau * cfg.subcarrier_spacing;
        const CVec c = phase_ramp(n, w1);
        // rank-1 update: sqrt(P) rho c (b^T W)
        Eigen::RowVectorXcd q = b.transpose() * profile.w;
        y.noalias() += (sqrt_p * path.rho) * (c * q);
    }

    if (add_noise)
    {
        std::normal_distribution<double> g(0.0, std::sqrt(cfg.noise_var / 2.0));
        for (int col = 0; col < t; ++col)
            for (int row = 0; row < n; ++row)
                y(row, col) += Cplx(g(rng), g(rng));
    }

    ReceivedSignal out;
    out.y = std::move(y);
    return out;
}

double snr_empirical_db(const CMat &y_noiseless, double sigma2)
{
    const double energy = y_noiseless.squaredNorm();
    const double denom = sigma2 * static_cast<double>(y_noiseless.rows()) * static_cast<double>(y_noiseless.cols());
    return 10.0 * std::log10(energy / denom);
}

double noise_var_for_snr_db(const CMat &y_noiseless, double snr_db)
{
    const double energy = y_noiseless.squaredNorm();
    const double nt = static_cast<double>(y_noiseless.rows()) * static_cast<double>(y_noiseless.cols());
    return energy / (nt * std::pow(10.0, snr_db / 10.0));
}

RisProfile random_profile(int n_elements, int n_symbols, std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    RisProfile p;
    p.w.resize(n_elements, n_symbols);
    for (int c = 0; c < n_symbols; ++c)
        for (int r = 0; r < n_elements; ++r)
            p.w(r, c) = std::polar(1.0, phase(rng));
    return p;
}

} // namespace risloc
