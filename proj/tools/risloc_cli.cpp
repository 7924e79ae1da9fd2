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

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "risloc/channel.hpp"
#include "risloc/coarse.hpp"
#include "risloc/config.hpp"
#include "risloc/crb.hpp"
#include "risloc/geometry.hpp"
#include "risloc/harness.hpp"
#include "risloc/phase_opt.hpp"
#include "risloc/refine.hpp"
#include "risloc/rng.hpp"
#include "risloc/ulris.hpp"

using namespace risloc;

namespace
{

FullConfig load_or_default(const std::string &path)
{
    if (path.empty())
        return paper_preset();
    return load_config(path, &std::cerr);
}

std::pair<int, int> parse_ris_size(const std::string &text)
{
    const size_t x = text.find('x');
    if (x == std::string::npos)
        throw CLI::ValidationError("--ris expects <Nx>x<Nz>, e.g. 24x24");
    return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
}

// Optimized profile for the configured scenario with the true channel as
// prior (the workflow feeds estimates from a previous pass through the
// config positions).
RisProfile optimized_profile(const FullConfig &fc, int variant, std::uint64_t seed)
{
    const ScenarioConfig &cfg = fc.scenario;
    std::mt19937_64 rng = make_rng(seed, 0xA11CE);
    const ChannelParams prior = channel_from_geometry(cfg, synthesize_gains(cfg, rng));
    SdpOptions opt;
    opt.gamma = fc.estimator.sdp_gamma;
    opt.max_iters = fc.estimator.sdp_max_iters;
    CMat lambda;
    if (variant == 1)
        lambda = solve_reduced_sdp(prior, cfg, cfg.n_symbols, opt).lambda;
    else
        lambda = solve_blockdiag(prior, cfg, cfg.n_symbols, opt).lambda;
    return gaussian_randomization(lambda, cfg.n_symbols, fc.estimator.randomization_draws, prior,
                                  cfg, rng);
}

RisProfile resolve_profile(const FullConfig &fc, const std::string &spec, std::uint64_t seed)
{
    const ScenarioConfig &cfg = fc.scenario;
    if (spec == "random")
    {
        std::mt19937_64 rng = make_rng(seed, 0xBEEF);
        return random_profile(cfg.layout.size(), cfg.n_symbols, rng);
    }
    if (spec == "kronecker" || spec.empty())
    {
        std::mt19937_64 rng = make_rng(seed, 0xBEEF);
        const auto [t1, t2] = resolve_tensor_split(cfg, fc.estimator);
        RisProfile p;
        p.w = build_kronecker_profile(cfg.layout.n_x, cfg.layout.n_z, t1, t2, rng).assemble();
        return p;
    }
    if (spec == "opt1")
        return optimized_profile(fc, 1, seed);
    if (spec == "opt2")
        return optimized_profile(fc, 2, seed);
    if (spec.rfind("file:", 0) == 0)
        return load_profile_text(spec.substr(5));
    throw CLI::ValidationError("--profile must be random|kronecker|opt1|opt2|file:<path>");
}

void print_solution(const ScenarioConfig &cfg, const ChannelParams &refined,
                    const PositionSolution &sol)
{
    std::printf("UE position   est [%9.5f %9.5f %9.5f] m   true [%g %g %g] m   error %.3e m\n",
                sol.p0_hat.x(), sol.p0_hat.y(), sol.p0_hat.z(), cfg.p_ue.x(), cfg.p_ue.y(),
                cfg.p_ue.z(), (sol.p0_hat - cfg.p_ue).norm());
    for (size_t s = 0; s < sol.scatterer_hats.size(); ++s)
    {
        const Vec3 &p = sol.scatterer_hats[s];
        const bool used = sol.used_paths.count(static_cast<int>(s) + 1) > 0;
        std::printf("scatterer %zu   est [%9.5f %9.5f %9.5f] m%s\n", s + 1, p.x(), p.y(), p.z(),
                    used ? "" : "   (excluded by the multipath gate)");
    }
    std::printf("clock offset  est %.6e s   true %.6e s   error %.3e s\n", sol.delta_hat,
                cfg.clock_offset, sol.delta_hat - cfg.clock_offset);
    std::printf("refined LoS params: el %.6f rad, az %.6f rad, d %.6f m, tau %.6e s\n",
                refined.paths[0].phi_el, refined.paths[0].phi_az, refined.paths[0].d,
                refined.paths[0].tau);
}

int cmd_simulate(const FullConfig &fc, const std::string &profile_spec, std::uint64_t seed,
                 const std::string &out)
{
    const ScenarioConfig &cfg = fc.scenario;
    const RisProfile w = resolve_profile(fc, profile_spec, seed);
    std::mt19937_64 rng = make_rng(seed, 1);
    const ChannelParams eta = channel_from_geometry(cfg, synthesize_gains(cfg, rng));
    const ReceivedSignal clean = synthesize_received(cfg, eta, w, false, rng);
    std::mt19937_64 noise_rng = make_rng(seed, 2);
    ReceivedSignal noisy = synthesize_received(cfg, eta, w, true, noise_rng);

    std::printf("synthesized %dx%d observation, empirical SNR %.2f dB\n", cfg.n_subcarriers,
                cfg.n_symbols, snr_empirical_db(clean.y, cfg.noise_var));
    if (!out.empty())
    {
        std::ofstream os(out, std::ios::binary);
        if (!os)
        {
            std::fprintf(stderr, "cannot open %s\n", out.c_str());
            return 1;
        }
        os.precision(17);
        os << "subcarrier,symbol,re,im\n";
        for (int n = 0; n < cfg.n_subcarriers; ++n)
            for (int t = 0; t < cfg.n_symbols; ++t)
                os << n << ',' << t << ',' << noisy.y(n, t).real() << ',' << noisy.y(n, t).imag()
                   << '\n';
        std::printf("wrote %s\n", out.c_str());
    }
    return 0;
}

int cmd_estimate(const FullConfig &fc, const std::string &estimator,
                 const std::string &profile_spec, std::uint64_t seed)
{
    const ScenarioConfig &cfg = fc.scenario;
    const EstimatorOptions &opt = fc.estimator;
    std::mt19937_64 rng = make_rng(seed, 1);
    const ChannelParams truth = channel_from_geometry(cfg, synthesize_gains(cfg, rng));

    const bool two_stage = profile_spec == "opt1" || profile_spec == "opt2" ||
                           profile_spec.rfind("file:", 0) == 0;

    if (estimator == "p2")
    {
        if (two_stage)
            throw CLI::ValidationError("estimator p2 requires its own block-orthogonal profile");
        EstimatorOptions opt2 = opt;
        SubRisPlan plan = build_subris_plan(cfg, opt2, rng);
        const RisProfile w = assemble_ul_profile(plan);
        const CMat y = synthesize_received(cfg, truth, w, true, rng).y;
        const UlrisEstimate est = ulris_estimate(y, plan, cfg, opt2, cfg.n_paths());
        print_solution(cfg, est.eta_refined, est.solution);
        return 0;
    }

    // Stage 1: Kronecker random profile, full coarse + SAGE chain.
    const auto [t1, t2] = resolve_tensor_split(cfg, opt);
    const KroneckerProfile kp = build_kronecker_profile(cfg.layout.n_x, cfg.layout.n_z, t1, t2, rng);
    const CMat w1 = kp.assemble();
    RisProfile rp1;
    rp1.w = w1;
    const CMat y1 = synthesize_received(cfg, truth, rp1, true, rng).y;
    const CoarseEstimate ce = coarse_estimate(y1, kp, cfg, opt, cfg.n_paths());
    SageOptions sage_opt{opt.sage_eps, opt.sage_max_outer, opt.nm_max_evals, opt.nm_tol};
    const SageResult stage1 = sage_refine(y1, ce.eta, w1, cfg, sage_opt);

    if (!two_stage)
    {
        const PositionSolution sol = solve_position(stage1.eta, w1, cfg, opt);
        print_solution(cfg, stage1.eta, sol);
        return 0;
    }

    // Stage 2 under the optimized/file profile, initialized from stage 1.
    const RisProfile w2 = resolve_profile(fc, profile_spec, seed);
    const CMat y2 = synthesize_received(cfg, truth, w2, true, rng).y;
    const SageResult stage2 = sage_refine(y2, stage1.eta, w2.w, cfg, sage_opt);
    const PositionSolution sol = solve_position(stage2.eta, w2.w, cfg, opt);
    std::printf("two-stage estimate under profile '%s'\n", profile_spec.c_str());
    print_solution(cfg, stage2.eta, sol);
    return 0;
}

int cmd_bounds(const FullConfig &fc, const std::string &profile_spec, std::uint64_t seed,
               const std::string &out)
{
    const ScenarioConfig &cfg = fc.scenario;
    const RisProfile w = resolve_profile(fc, profile_spec, seed);
    std::mt19937_64 rng = make_rng(seed, 1);
    const ChannelParams truth = channel_from_geometry(cfg, synthesize_gains(cfg, rng));
    const BoundReport rep = bounds(position_eta_from_channel(truth, cfg), w.w, cfg);

    std::printf("PEB %.6e m, CEB %.6e s\n", rep.peb, rep.ceb);
    std::printf("LoS-path channel CRBs: el %.3e rad, az %.3e rad, d %.3e m, tau %.3e s\n",
                std::sqrt(rep.crb_channel[2]), std::sqrt(rep.crb_channel[3]),
                std::sqrt(rep.crb_channel[4]), std::sqrt(rep.crb_channel[5]));
    if (!out.empty())
    {
        std::ofstream os(out, std::ios::binary);
        os << BoundReport::csv_header() << '\n' << rep.csv_row() << '\n';
        std::printf("wrote %s\n", out.c_str());
    }
    return 0;
}

int cmd_optimize(const FullConfig &fc, const std::string &variant, std::uint64_t seed,
                 const std::string &out)
{
    if (out.empty())
        throw CLI::ValidationError("optimize-phase requires --out <file>");
    const int v = (variant == "opt1") ? 1 : 2;
    const RisProfile w = optimized_profile(fc, v, seed);
    save_profile_text(w, out);
    std::mt19937_64 rng = make_rng(seed, 0xA11CE);
    const ChannelParams prior =
        channel_from_geometry(fc.scenario, synthesize_gains(fc.scenario, rng));
    std::printf("optimized profile (%s) PEB %.6e m written to %s\n", variant.c_str(),
                peb_for_profile(prior, w.w, fc.scenario), out.c_str());
    return 0;
}

int cmd_sweep(FullConfig fc, const std::string &estimator, const std::string &snr_list,
              const std::string &ris_size, int trials, std::uint64_t seed, const std::string &out)
{
    ExperimentSpec spec;
    if (!ris_size.empty())
    {
        const auto [nx, nz] = parse_ris_size(ris_size);
        fc.scenario.layout =
            RisLayout::regular(fc.scenario.p_ris, nx, nz, fc.scenario.layout.spacing);
    }
    spec.config = fc;
    spec.estimator = (estimator == "p2") ? Estimator::Proposed2 : Estimator::Proposed1;
    spec.n_trials = trials;
    spec.master_seed = seed;
    if (!snr_list.empty())
    {
        std::stringstream ss(snr_list);
        std::string tok;
        while (std::getline(ss, tok, ','))
            spec.snr_db.push_back(std::stod(tok));
    }
    if (spec.snr_db.empty())
        throw CLI::ValidationError("sweep requires --snr-db <list>");

    const std::vector<ResultRow> rows = run_experiment(spec);
    for (const ResultRow &r : rows)
        std::printf("snr %+6.1f dB: refined pos RMSE %.4e m (PEB %.4e), clock RMSE %.4e s "
                    "(CEB %.4e), %d/%d trials ok, %.1f s\n",
                    r.sweep_value, r.refined_rmse[4], r.peb, r.refined_rmse[5], r.ceb,
                    r.n_trials - r.n_failed, r.n_trials, r.wall_s);
    if (!out.empty())
    {
        emit_csv(rows, out);
        std::printf("wrote %s\n", out.c_str());
    }
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"RIS-aided near-field localization and synchronization toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path, profile_spec = "kronecker", estimator = "p1";
    std::string snr_list, ris_size, variant = "opt2";
    std::uint64_t seed = 1;
    int trials = 100;

    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", config_path, "scenario config file");
        sub->add_option("--seed", seed, "master seed");
    };

    CLI::App *sim = app.add_subcommand("simulate", "synthesize one observation matrix");
    add_common(sim);
    sim->add_option("--profile", profile_spec, "random|kronecker|opt1|opt2|file:<path>");
    sim->add_option("--out", out_path, "CSV for the received signal");

    CLI::App *est = app.add_subcommand("estimate", "run one estimation trial");
    add_common(est);
    est->add_option("--estimator", estimator, "p1|p2");
    est->add_option("--profile", profile_spec, "random|kronecker|opt1|opt2|file:<path>");

    CLI::App *bnd = app.add_subcommand("bounds", "theoretical bounds for the scenario");
    add_common(bnd);
    bnd->add_option("--profile", profile_spec, "random|kronecker|opt1|opt2|file:<path>");
    bnd->add_option("--out", out_path, "CSV output path");

    CLI::App *opt = app.add_subcommand("optimize-phase", "design a PEB-minimizing profile");
    add_common(opt);
    opt->add_option("--profile", variant, "opt1|opt2 (design variant)");
    opt->add_option("--out", out_path, "where to store the profile matrix");

    CLI::App *swp = app.add_subcommand("sweep", "Monte Carlo sweep with CSV output");
    add_common(swp);
    swp->add_option("--estimator", estimator, "p1|p2");
    swp->add_option("--snr-db", snr_list, "comma-separated SNR grid, dB");
    swp->add_option("--ris", ris_size, "override RIS size, e.g. 24x24");
    swp->add_option("--trials", trials, "Monte Carlo trials per sweep point");
    swp->add_option("--out", out_path, "CSV output path");

    CLI11_PARSE(app, argc, argv);

    try
    {
        const FullConfig fc = load_or_default(config_path);
        if (sim->parsed())
            return cmd_simulate(fc, profile_spec, seed, out_path);
        if (est->parsed())
            return cmd_estimate(fc, estimator, profile_spec, seed);
        if (bnd->parsed())
            return cmd_bounds(fc, profile_spec, seed, out_path);
        if (opt->parsed())
            return cmd_optimize(fc, variant, seed, out_path);
        if (swp->parsed())
            return cmd_sweep(fc, estimator, snr_list, ris_size, trials, seed, out_path);
    }
    catch (const std::exception &e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
