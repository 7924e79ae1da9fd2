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

#include "risloc/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace risloc
{

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }

FullConfig paper_preset()
{
    FullConfig fc;
    ScenarioConfig &s = fc.scenario;
    s.p_bs = Vec3(0.0, -60.0, 5.0);
    s.p_ris = Vec3(0.0, 0.0, 0.0);
    s.p_ue = Vec3(3.0, 6.0, -1.0);
    s.scatterers = {Vec3(-1.0, 3.0, 2.0)};
    s.clock_offset = 100e-9;
    s.f_c = 28.0e9;
    s.subcarrier_spacing = 120e3;
    s.n_subcarriers = 80;
    s.n_symbols = 256;
    s.tx_power = dbm_to_watt(29.0);
    s.noise_var = dbm_to_watt(-115.2);
    s.reflection_loss = 0.6;
    s.rng_seed = 1;
    s.layout = RisLayout::regular(s.p_ris, 48, 48, 0.5 * s.wavelength());
    return fc;
}

FullConfig desk_preset()
{
    FullConfig fc = paper_preset();
    ScenarioConfig &s = fc.scenario;
    s.layout = RisLayout::regular(s.p_ris, 24, 24, 0.5 * s.wavelength());
    return fc;
}

std::pair<int, int> near_square_split(int t)
{
    if (t < 1)
        throw std::invalid_argument("near_square_split: t must be >= 1");
    int best = 1;
    for (int a = 1; a * a <= t; ++a)
        if (t % a == 0)
            best = a;
    return {t / best, best};
}

std::pair<int, int> resolve_tensor_split(const ScenarioConfig &scenario, const EstimatorOptions &opt)
{
    if (opt.t1 > 0 && opt.t2 > 0)
    {
        if (opt.t1 * opt.t2 != scenario.n_symbols)
            throw std::invalid_argument("tensor split t1*t2 must equal n_symbols");
        return {opt.t1, opt.t2};
    }
    return near_square_split(scenario.n_symbols);
}

namespace
{

Vec3 parse_vec3(const std::string &text, const std::string &key)
{
    Vec3 v;
    char comma1 = 0, comma2 = 0;
    std::istringstream ss(text);
    ss >> v.x() >> comma1 >> v.y() >> comma2 >> v.z();
    if (ss.fail() || comma1 != ',' || comma2 != ',')
        throw std::invalid_argument("config: cannot parse '" + key + "' as x,y,z");
    return v;
}

double parse_double(const std::string &text, const std::string &key)
{
    size_t pos = 0;
    double v = 0.0;
    try
    {
        v = std::stod(text, &pos);
    }
    catch (const std::exception &)
    {
        throw std::invalid_argument("config: cannot parse '" + key + "' as number");
    }
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
        ++pos;
    if (pos != text.size())
        throw std::invalid_argument("config: trailing characters in '" + key + "'");
    return v;
}

int parse_int(const std::string &text, const std::string &key)
{
    const double v = parse_double(text, key);
    if (v != std::floor(v))
        throw std::invalid_argument("config: '" + key + "' must be an integer");
    return static_cast<int>(v);
}

std::string trim(const std::string &s)
{
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    return (a == std::string::npos) ? std::string() : s.substr(a, b - a + 1);
}

} // namespace

FullConfig parse_config(std::istream &in, std::ostream *warn_stream)
{
    FullConfig fc = paper_preset();
    ScenarioConfig &s = fc.scenario;
    EstimatorOptions &e = fc.estimator;
    s.scatterers.clear();

    int ris_nx = 48, ris_nz = 48;
    double spacing_wl = 0.5;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "p_bs")
            s.p_bs = parse_vec3(val, key);
        else if (key == "p_ris")
            s.p_ris = parse_vec3(val, key);
        else if (key == "p_ue")
            s.p_ue = parse_vec3(val, key);
        else if (key == "scatterer")
            s.scatterers.push_back(parse_vec3(val, key));
        else if (key == "clock_offset_s")
            s.clock_offset = parse_double(val, key);
        else if (key == "f_c_hz")
            s.f_c = parse_double(val, key);
        else if (key == "subcarrier_spacing_hz")
            s.subcarrier_spacing = parse_double(val, key);
        else if (key == "n_subcarriers")
            s.n_subcarriers = parse_int(val, key);
        else if (key == "n_symbols")
            s.n_symbols = parse_int(val, key);
        else if (key == "tx_power_dbm")
            s.tx_power = dbm_to_watt(parse_double(val, key));
        else if (key == "noise_dbm")
            s.noise_var = dbm_to_watt(parse_double(val, key));
        else if (key == "reflection_loss")
            s.reflection_loss = parse_double(val, key);
        else if (key == "seed")
            s.rng_seed = static_cast<std::uint64_t>(parse_double(val, key));
        else if (key == "ris_nx")
            ris_nx = parse_int(val, key);
        else if (key == "ris_nz")
            ris_nz = parse_int(val, key);
        else if (key == "ris_spacing_wavelengths")
            spacing_wl = parse_double(val, key);
        else if (key == "t1")
            e.t1 = parse_int(val, key);
        else if (key == "t2")
            e.t2 = parse_int(val, key);
        else if (key == "omega_grid")
            e.omega_grid = parse_int(val, key);
        else if (key == "dist_grid_size")
            e.dist_grid_size = parse_int(val, key);
        else if (key == "dist_grid_min")
            e.dist_grid_min = parse_double(val, key);
        else if (key == "dist_grid_max")
            e.dist_grid_max = parse_double(val, key);
        else if (key == "lasso_xi_scale")
            e.lasso_xi_scale = parse_double(val, key);
        else if (key == "lasso_max_iters")
            e.lasso_max_iters = parse_int(val, key);
        else if (key == "lasso_tol")
            e.lasso_tol = parse_double(val, key);
        else if (key == "remark1_delta_scale")
            e.remark1_delta_scale = parse_double(val, key);
        else if (key == "sage_eps")
            e.sage_eps = parse_double(val, key);
        else if (key == "sage_max_outer")
            e.sage_max_outer = parse_int(val, key);
        else if (key == "nm_max_evals")
            e.nm_max_evals = parse_int(val, key);
        else if (key == "nm_tol")
            e.nm_tol = parse_double(val, key);
        else if (key == "filter_sigma")
            e.filter_sigma = parse_double(val, key);
        else if (key == "filter_floor_s")
            e.filter_floor_s = parse_double(val, key);
        else if (key == "ul_l1")
            e.ul_l1 = parse_int(val, key);
        else if (key == "ul_l2")
            e.ul_l2 = parse_int(val, key);
        else if (key == "ul_h")
            e.ul_h = parse_int(val, key);
        else if (key == "ul_t1")
            e.ul_t1 = parse_int(val, key);
        else if (key == "ul_t2")
            e.ul_t2 = parse_int(val, key);
        else if (key == "sdp_gamma")
            e.sdp_gamma = parse_double(val, key);
        else if (key == "sdp_max_iters")
            e.sdp_max_iters = parse_int(val, key);
        else if (key == "randomization_draws")
            e.randomization_draws = parse_int(val, key);
        else
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }

    s.layout = RisLayout::regular(s.p_ris, ris_nx, ris_nz, spacing_wl * s.wavelength());
    s.validate();
    if (warn_stream && s.bandwidth() / s.f_c > 0.05)
        (*warn_stream) << "warning: bandwidth is more than 5% of the carrier; "
                          "the narrow-band model may be inaccurate\n";
    return fc;
}

FullConfig load_config(const std::string &path, std::ostream *warn_stream)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file: " + path);
    return parse_config(in, warn_stream);
}

} // namespace risloc
