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

#ifndef RISLOC_TYPES_HPP
#define RISLOC_TYPES_HPP

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace risloc
{

using Cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;

constexpr double kSpeedOfLight = 3.0e8; // m/s
constexpr double kPi = 3.14159265358979323846;

/// Thrown when a geometric configuration makes a quantity undefined
/// (coincident points, parallel bearings, singular information matrix).
class DegenerateGeometryError : public std::runtime_error
{
    using std::runtime_error::runtime_error;
};

/// Thrown when estimated mode frequencies map outside the feasible
/// angle cone and the path must be discarded by the caller.
class InfeasibleFrequencyError : public std::runtime_error
{
    using std::runtime_error::runtime_error;
};

// Planar RIS parallel to the x-o-z plane. Element r = i_x * n_z + i_z
// (x-major), a regular grid centered on `center`. The x-major order is
// what makes the far-field steering vector an exact Kronecker product
// of the per-axis arrays.
struct RisLayout
{
    Vec3 center = Vec3::Zero();
    int n_x = 1;
    int n_z = 1;
    double spacing = 0.0; // meters
    std::vector<Vec3> element_positions;

    static RisLayout regular(const Vec3 &center, int n_x, int n_z, double spacing);

    int size() const { return n_x * n_z; }
    // Diagonal aperture of the grid; zero for a single element.
    double aperture() const;
};

// Full physical setup. All fields in SI units; dBm -> watt conversion
// happens once at config parse time.
struct ScenarioConfig
{
    Vec3 p_bs = Vec3::Zero();  // base station (known)
    Vec3 p_ris = Vec3::Zero(); // RIS center (known)
    Vec3 p_ue = Vec3::Zero();  // user equipment (to estimate)
    std::vector<Vec3> scatterers;

    double clock_offset = 0.0;         // seconds
    double f_c = 28.0e9;               // Hz
    double subcarrier_spacing = 120e3; // Hz
    int n_subcarriers = 80;
    int n_symbols = 256;
    double tx_power = 0.794328234724281502; // watts (29 dBm)
    double noise_var = 3.01995172040202e-15; // watts (-115.2 dBm)
    double reflection_loss = 0.6;      // kappa in [0, 1]
    std::uint64_t rng_seed = 1;
    RisLayout layout;

    double wavelength() const { return kSpeedOfLight / f_c; }
    double bandwidth() const { return n_subcarriers * subcarrier_spacing; }
    int n_paths() const { return static_cast<int>(scatterers.size()) + 1; }

    void validate() const; // throws std::invalid_argument on bad fields
};

// Channel parameters of one path: eta_s = (Re rho, Im rho, phi_el, phi_az, d, tau).
struct PathParams
{
    Cplx rho{0.0, 0.0};
    double phi_el = 0.0; // rad, in (0, pi)
    double phi_az = 0.0; // rad, in (-pi, pi]
    double d = 0.0;      // meters, RIS center to target
    double tau = 0.0;    // seconds (includes clock offset)
};

// Per-path channel parameter vector eta. Path 0 is the LoS (RIS-UE) path
// and carries the smallest ToA; paths 1..N_s go through the scatterers.
struct ChannelParams
{
    std::vector<PathParams> paths;

    int n_paths() const { return static_cast<int>(paths.size()); }
    // Flatten to [Re rho, Im rho, phi_el, phi_az, d, tau] per path.
    RVec flatten() const;
    static ChannelParams unflatten(const RVec &eta);
};

// Unit-modulus RIS phase profile, one column per OFDM symbol.
struct RisProfile
{
    CMat w; // N_R x T

    int n_elements() const { return static_cast<int>(w.rows()); }
    int n_symbols() const { return static_cast<int>(w.cols()); }
};

// Received OFDM pilot observation. When the profile has Kronecker
// structure the matrix also admits a (N, T1, T2) tensor view with
// column index t = t1 * T2 + t2.
struct ReceivedSignal
{
    CMat y;     // N x T
    int t1 = 0; // tensor dims; 0 when no Kronecker structure applies
    int t2 = 0;
};

} // namespace risloc

#endif
