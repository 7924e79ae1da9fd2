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

#include "risloc/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "risloc/channel.hpp"
#include "risloc/coarse.hpp"
#include "risloc/geometry.hpp"
#include "risloc/phase_opt.hpp"
#include "risloc/refine.hpp"
#include "risloc/rng.hpp"
#include "risloc/ulris.hpp"

namespace risloc
{

double rmse(const std::vector<double> &errors)
{
    if (errors.empty())
        throw std::invalid_argument("rmse: empty error set");
    double acc = 0.0;
    for (double e : errors)
        acc += e * e;
    return std::sqrt(acc / static_cast<double>(errors.size()));
}

int resolve_thread_count(int requested)
{
    if (requested > 0)
        return requested;
    if (const char *env = std::getenv("RISLOC_THREADS"))
    {
        const int v = std::atoi(env);
        if (v > 0)
            return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

namespace
{

constexpr const char *kCsvHeader =
    "sweep,n_trials,n_failed,"
    "coarse_rmse_phi_el,coarse_rmse_phi_az,coarse_rmse_tau,coarse_rmse_d,"
    "coarse_rmse_pos,coarse_rmse_clock,"
    "refined_rmse_phi_el,refined_rmse_phi_az,refined_rmse_tau,refined_rmse_d,"
    "refined_rmse_pos,refined_rmse_clock,"
    "crb_phi_el,crb_phi_az,crb_tau,crb_d,peb,ceb";

std::string fmt_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void fill_channel_errors(const PathParams &est, const PathParams &truth, double err[6])
{
    err[0] = est.phi_el - truth.phi_el;
    err[1] = wrap_angle(est.phi_az - truth.phi_az);
    err[2] = est.tau - truth.tau;
    err[3] = est.d - truth.d;
}

} // namespace

void emit_csv(const std::vector<ResultRow> &rows, const std::string &path)
{
    std::ofstream out(path, std::ios::binary); // fixed newlines across platforms
    if (!out)
        throw std::runtime_error("emit_csv: cannot open " + path);
    out << kCsvHeader << '\n';
    for (const ResultRow &r : rows)
    {
        out << fmt_double(r.sweep_value) << ',' << r.n_trials << ',' << r.n_failed;
        for (double v : r.coarse_rmse)
            out << ',' << fmt_double(v);
        for (double v : r.refined_rmse)
            out << ',' << fmt_double(v);
        out << ',' << fmt_double(r.crb_phi_el) << ',' << fmt_double(r.crb_phi_az) << ','
            << fmt_double(r.crb_tau) << ',' << fmt_double(r.crb_d) << ',' << fmt_double(r.peb)
            << ',' << fmt_double(r.ceb) << '\n';
    }
    if (!out)
        throw std::runtime_error("emit_csv: write failed for " + path);
}

std::vector<ResultRow> parse_csv(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("parse_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader)
        throw std::runtime_error("parse_csv: unexpected header");
    std::vector<ResultRow> rows;
    while (std::getline(in, line))
    {
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::vector<double> vals;
        std::string tok;
        while (std::getline(ss, tok, ','))
            vals.push_back(std::stod(tok));
        if (vals.size() != 21)
            throw std::runtime_error("parse_csv: bad column count");
        ResultRow r;
        int k = 0;
        r.sweep_value = vals[k++];
        r.n_trials = static_cast<int>(vals[k++]);
        r.n_failed = static_cast<int>(vals[k++]);
        for (double &v : r.coarse_rmse)
            v = vals[k++];
        for (double &v : r.refined_rmse)
            v = vals[k++];
        r.crb_phi_el = vals[k++];
        r.crb_phi_az = vals[k++];
        r.crb_tau = vals[k++];
        r.crb_d = vals[k++];
        r.peb = vals[k++];
        r.ceb = vals[k++];
        rows.push_back(r);
    }
    return rows;
}

TrialResult run_trial(const ScenarioConfig &cfg, const EstimatorOptions &opt,
                      Estimator estimator, std::uint64_t master_seed, int trial_index,
                      std::optional<double> snr_db_target)
{
    TrialResult out;
    try
    {
        std::mt19937_64 rng = make_rng(master_seed, static_cast<std::uint64_t>(trial_index));
        const std::vector<Cplx> gains = synthesize_gains(cfg, rng);
        const ChannelParams truth = channel_from_geometry(cfg, gains);
        const Vec3 p0_true = cfg.p_ue;
        const double delta_true = cfg.clock_offset;
        const int n_paths = cfg.n_paths();

        ScenarioConfig work = cfg;

        ChannelParams coarse_eta, refined_eta;
        PositionSolution solution;
        Vec3 p0_coarse;
        double delta_coarse;

        if (estimator == Estimator::Proposed1)
        {
            const auto [t1, t2] = resolve_tensor_split(cfg, opt);
            KroneckerProfile kp =
                build_kronecker_profile(cfg.layout.n_x, cfg.layout.n_z, t1, t2, rng);
            const CMat w = kp.assemble();
            RisProfile synth_profile;
            synth_profile.w = w;
            const ReceivedSignal y0 = synthesize_received(work, truth, synth_profile, false, rng);
            if (snr_db_target)
                work.noise_var = noise_var_for_snr_db(y0.y, *snr_db_target);
            CMat y = y0.y;
            {
                std::normal_distribution<double> g(0.0, std::sqrt(work.noise_var / 2.0));
                for (Eigen::Index c = 0; c < y.cols(); ++c)
                    for (Eigen::Index r = 0; r < y.rows(); ++r)
                        y(r, c) += Cplx(g(rng), g(rng));
            }

            const CoarseEstimate ce = coarse_estimate(y, kp, work, opt, n_paths);
            coarse_eta = ce.eta;

            SageOptions sage_opt;
            sage_opt.eps = opt.sage_eps;
            sage_opt.max_outer = opt.sage_max_outer;
            sage_opt.nm_max_evals = opt.nm_max_evals;
            sage_opt.nm_tol = opt.nm_tol;
            const SageResult sage = sage_refine(y, coarse_eta, w, work, sage_opt);
            refined_eta = sage.eta;

            solution = solve_position(refined_eta, w, work, opt);
            const PositionSolution coarse_sol = init_solution(coarse_eta, work);
            p0_coarse = coarse_sol.p0_hat;
            delta_coarse = coarse_sol.delta_hat;
        }
        else
        {
            SubRisPlan plan = build_subris_plan(work, opt, rng);
            const RisProfile rp = assemble_ul_profile(plan);
            const ReceivedSignal y0 = synthesize_received(work, truth, rp, false, rng);
            if (snr_db_target)
                work.noise_var = noise_var_for_snr_db(y0.y, *snr_db_target);
            CMat y = y0.y;
            {
                std::normal_distribution<double> g(0.0, std::sqrt(work.noise_var / 2.0));
                for (Eigen::Index c = 0; c < y.cols(); ++c)
                    for (Eigen::Index r = 0; r < y.rows(); ++r)
                        y(r, c) += Cplx(g(rng), g(rng));
            }

            const UlrisEstimate ul = ulris_estimate(y, plan, work, opt, n_paths);
            coarse_eta = ul.eta_coarse;
            refined_eta = ul.eta_refined;
            solution = ul.solution;
            p0_coarse = ul.coarse_solution.p0_hat;
            delta_coarse = ul.coarse_solution.delta_hat;
        }

        fill_channel_errors(coarse_eta.paths[0], truth.paths[0], out.coarse_err);
        fill_channel_errors(refined_eta.paths[0], truth.paths[0], out.refined_err);
        out.coarse_err[4] = (p0_coarse - p0_true).norm();
        out.coarse_err[5] = delta_coarse - delta_true;
        out.refined_err[4] = (solution.p0_hat - p0_true).norm();
        out.refined_err[5] = solution.delta_hat - delta_true;
        out.ok = true;
    }
    catch (const std::exception &e)
    {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

namespace
{

// Bounds of the sweep point, evaluated at the trial-0 realization.
void attach_bounds(ResultRow &row, const ScenarioConfig &cfg, const EstimatorOptions &opt,
                   Estimator estimator, std::uint64_t master_seed,
                   std::optional<double> snr_db_target)
{
    std::mt19937_64 rng = make_rng(master_seed, 0);
    const std::vector<Cplx> gains = synthesize_gains(cfg, rng);
    const ChannelParams truth = channel_from_geometry(cfg, gains);

    RisProfile rp;
    if (estimator == Estimator::Proposed2)
    {
        SubRisPlan plan = build_subris_plan(cfg, opt, rng);
        rp = assemble_ul_profile(plan);
    }
    else
    {
        const auto [t1, t2] = resolve_tensor_split(cfg, opt);
        rp.w = build_kronecker_profile(cfg.layout.n_x, cfg.layout.n_z, t1, t2, rng).assemble();
    }

    ScenarioConfig work = cfg;
    if (snr_db_target)
    {
        std::mt19937_64 tmp = rng;
        const ReceivedSignal y0 = synthesize_received(work, truth, rp, false, tmp);
        work.noise_var = noise_var_for_snr_db(y0.y, *snr_db_target);
    }

    const PositionEta eta_p = position_eta_from_channel(truth, work);
    const BoundReport rep = bounds(eta_p, rp.w, work);
    row.crb_phi_el = std::sqrt(rep.crb_channel[2]);
    row.crb_phi_az = std::sqrt(rep.crb_channel[3]);
    row.crb_d = std::sqrt(rep.crb_channel[4]);
    row.crb_tau = std::sqrt(rep.crb_channel[5]);
    row.peb = rep.peb;
    row.ceb = rep.ceb;
}

ResultRow run_sweep_point(const ScenarioConfig &cfg, const EstimatorOptions &opt,
                          const ExperimentSpec &spec, double sweep_value,
                          std::optional<double> snr_db_target)
{
    const auto t_start = std::chrono::steady_clock::now();

    ResultRow row;
    row.sweep_value = sweep_value;
    row.n_trials = spec.n_trials;

    std::vector<TrialResult> trials(spec.n_trials);
    std::atomic<int> next{0};
    const int n_threads = std::min(resolve_thread_count(spec.n_threads), spec.n_trials);
    auto worker = [&]() {
        for (int i = next.fetch_add(1); i < spec.n_trials; i = next.fetch_add(1))
            trials[i] = run_trial(cfg, opt, spec.estimator, spec.master_seed, i, snr_db_target);
    };
    if (n_threads <= 1)
        worker();
    else
    {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int k = 0; k < n_threads; ++k)
            pool.emplace_back(worker);
        for (std::thread &th : pool)
            th.join();
    }

    // Fixed-order reduction: results depend only on (seed, trial index).
    std::vector<double> coarse_err[6], refined_err[6];
    for (const TrialResult &tr : trials)
    {
        if (!tr.ok)
        {
            ++row.n_failed;
            continue;
        }
        for (int k = 0; k < 6; ++k)
        {
            coarse_err[k].push_back(tr.coarse_err[k]);
            refined_err[k].push_back(tr.refined_err[k]);
        }
    }
    if (!coarse_err[0].empty())
        for (int k = 0; k < 6; ++k)
        {
            row.coarse_rmse[k] = rmse(coarse_err[k]);
            row.refined_rmse[k] = rmse(refined_err[k]);
        }

    attach_bounds(row, cfg, opt, spec.estimator, spec.master_seed, snr_db_target);
    row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return row;
}

} // namespace

std::vector<ResultRow> run_experiment(const ExperimentSpec &spec)
{
    if (spec.n_trials < 1)
        throw std::invalid_argument("run_experiment: n_trials must be >= 1");
    if (spec.snr_db.empty() && spec.ris_sizes.empty())
        throw std::invalid_argument("run_experiment: empty sweep");
    if (spec.profile != ProfileSource::KroneckerRandom)
        throw std::invalid_argument("run_experiment: sweeps support the kronecker-random profile; "
                                    "optimized profiles run through the estimate command");

    std::vector<ResultRow> rows;
    if (!spec.snr_db.empty())
    {
        for (double snr : spec.snr_db)
            rows.push_back(run_sweep_point(spec.config.scenario, spec.config.estimator, spec, snr,
                                           snr));
    }
    else
    {
        for (int n : spec.ris_sizes)
        {
            ScenarioConfig cfg = spec.config.scenario;
            cfg.layout = RisLayout::regular(cfg.p_ris, n, n, cfg.layout.spacing);
            rows.push_back(run_sweep_point(cfg, spec.config.estimator, spec,
                                           static_cast<double>(n) * n, std::nullopt));
        }
    }
    return rows;
}

} // namespace risloc
