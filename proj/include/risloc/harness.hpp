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

#ifndef RISLOC_HARNESS_HPP
#define RISLOC_HARNESS_HPP

#include <optional>
#include <string>

#include "risloc/config.hpp"
#include "risloc/crb.hpp"
#include "risloc/positioning.hpp"
#include "risloc/types.hpp"

namespace risloc
{

enum class Estimator
{
    Proposed1, // single-surface CPD-OMP + LASSO + SAGE + EXIP
    Proposed2  // sub-RIS separation + triangulation + SAGE + EXIP
};

enum class ProfileSource
{
    Random,          // dense unit-modulus (bounds/synthesis only)
    KroneckerRandom, // per-trial random Kronecker profile
    Optimized1,      // joint covariance design
    Optimized2,      // block-diagonal covariance design
    File
};

struct ExperimentSpec
{
    FullConfig config;
    std::vector<double> snr_db;  // SNR sweep; empty = RIS-size sweep
    std::vector<int> ris_sizes;  // square n_x = n_z values
    Estimator estimator = Estimator::Proposed1;
    ProfileSource profile = ProfileSource::KroneckerRandom;
    std::string profile_file;
    int n_trials = 100;
    std::uint64_t master_seed = 1;
    int n_threads = 0; // 0 = RISLOC_THREADS env or hardware concurrency
};

// Per-parameter error snapshot of one trial (UE path).
struct TrialResult
{
    bool ok = false;
    std::string error;
    double coarse_err[6] = {0, 0, 0, 0, 0, 0};  // phi_el, phi_az, tau, d, pos, clock
    double refined_err[6] = {0, 0, 0, 0, 0, 0};
};

struct ResultRow
{
    double sweep_value = 0.0;
    int n_trials = 0;
    int n_failed = 0;
    double coarse_rmse[6] = {0, 0, 0, 0, 0, 0};
    double refined_rmse[6] = {0, 0, 0, 0, 0, 0};
    double crb_phi_el = 0.0, crb_phi_az = 0.0, crb_tau = 0.0, crb_d = 0.0;
    double peb = 0.0, ceb = 0.0;
    double wall_s = 0.0; // reported on stdout, never written to the CSV
};

double rmse(const std::vector<double> &errors);

// Header plus one row per sweep point, full float precision. Wall time is
// deliberately not a column so identical runs are byte-identical.
void emit_csv(const std::vector<ResultRow> &rows, const std::string &path);
std::vector<ResultRow> parse_csv(const std::string &path);

// One seeded trial of either estimator. A target SNR overrides the
// configured noise variance through the empirical-SNR calibration.
TrialResult run_trial(const ScenarioConfig &cfg, const EstimatorOptions &opt,
                      Estimator estimator, std::uint64_t master_seed, int trial_index,
                      std::optional<double> snr_db_target);

std::vector<ResultRow> run_experiment(const ExperimentSpec &spec);

int resolve_thread_count(int requested);

} // namespace risloc

#endif
