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

#include "risloc/phase_opt.hpp"

#include <cmath>
#include <fstream>

#include "risloc/crb.hpp"
#include "risloc/geometry.hpp"
#include "risloc/steering.hpp"

namespace risloc
{

namespace
{

// 4x6 per-path coefficient block tying the derivative basis to the six
// channel parameters at subcarrier n (0-based).
CMat k_coefficients(const PathParams &p, int n, double delta_f, double sqrt_p)
{
    const double ang_rate = -2.0 * kPi * n * delta_f;
    const Cplx phase = std::polar(1.0, ang_rate * p.tau);
    const Cplx j(0.0, 1.0);
    CMat c = CMat::Zero(4, 6);
    c(0, 0) = phase;
    c(0, 1) = j * phase;
    c(0, 5) = j * ang_rate * p.rho * phase;
    c(1, 2) = p.rho * phase;
    c(2, 3) = p.rho * phase;
    c(3, 4) = p.rho * phase;
    return sqrt_p * c;
}

} // namespace

CMat k_matrix(const PathParams &eta_s, int n, const ScenarioConfig &cfg)
{
    const SteeringDerivs sd = combined_steering_derivs(eta_s.d, eta_s.phi_el, eta_s.phi_az,
                                                       cfg.p_bs, cfg.layout, cfg.wavelength());
    CMat basis(cfg.layout.size(), 4);
    basis << sd.b, sd.d_el, sd.d_az, sd.d_d;
    return basis * k_coefficients(eta_s, n, cfg.subcarrier_spacing, std::sqrt(cfg.tx_power));
}

CMat basis_b(const ChannelParams &eta, const ScenarioConfig &cfg)
{
    const int n_paths = eta.n_paths();
    CMat basis(cfg.layout.size(), 4 * n_paths);
    for (int s = 0; s < n_paths; ++s)
    {
        const PathParams &p = eta.paths[s];
        const SteeringDerivs sd =
            combined_steering_derivs(p.d, p.phi_el, p.phi_az, cfg.p_bs, cfg.layout, cfg.wavelength());
        basis.col(4 * s + 0) = sd.b;
        basis.col(4 * s + 1) = sd.d_el;
        basis.col(4 * s + 2) = sd.d_az;
        basis.col(4 * s + 3) = sd.d_d;
    }
    return basis;
}

RMat PhaseOptContext::fim_reduced_from_gram(const CMat &s_mat) const
{
    const int dim = static_cast<int>(jac_reduced.cols());
    CMat acc = CMat::Zero(dim, dim);
    for (const CMat &c : coeff)
        acc.noalias() += c.adjoint() * s_mat * c;
    return (2.0 / sigma2) * (jac_reduced * acc.real() * jac_reduced.transpose());
}

PhaseOptContext make_phase_context(const ChannelParams &prior, const ScenarioConfig &cfg,
                                   int n_symbols)
{
    const int n_paths = prior.n_paths();
    PhaseOptContext ctx;
    ctx.basis = basis_b(prior, cfg);
    ctx.sigma2 = cfg.noise_var;
    ctx.profile_diag_target = static_cast<double>(n_symbols);

    const double sqrt_p = std::sqrt(cfg.tx_power);
    ctx.coeff.reserve(cfg.n_subcarriers);
    for (int n = 0; n < cfg.n_subcarriers; ++n)
    {
        CMat c = CMat::Zero(4 * n_paths, 6 * n_paths);
        for (int s = 0; s < n_paths; ++s)
            c.block<4, 6>(4 * s, 6 * s) =
                k_coefficients(prior.paths[s], n, cfg.subcarrier_spacing, sqrt_p);
        ctx.coeff.push_back(std::move(c));
    }

    const PositionEta eta_p = position_eta_from_channel(prior, cfg);
    const RMat jac = jacobian_position(eta_p, cfg);
    ctx.jac_reduced = jac.topRows(3 * n_paths + 1);
    return ctx;
}

RMat fim_from_covariance(const ChannelParams &prior, const CMat &lambda,
                         const ScenarioConfig &cfg, int n_symbols)
{
    const PhaseOptContext ctx = make_phase_context(prior, cfg, n_symbols);
    const CMat s_mat = ctx.basis.adjoint() * lambda.conjugate() * ctx.basis;
    return ctx.fim_reduced_from_gram(s_mat);
}

double peb_from_reduced_fim(const RMat &fim)
{
    const RMat inv = invert_psd(fim, 1e-12, "peb_from_reduced_fim");
    return std::sqrt(inv.topLeftCorner(3, 3).trace());
}

double peb_for_profile(const ChannelParams &prior, const CMat &w_profile,
                       const ScenarioConfig &cfg)
{
    const PhaseOptContext ctx = make_phase_context(prior, cfg, static_cast<int>(w_profile.cols()));
    const CMat v = w_profile.transpose() * ctx.basis; // S = B^H W^* W^T B = V^H V
    return peb_from_reduced_fim(ctx.fim_reduced_from_gram(v.adjoint() * v));
}

namespace
{

CMat project_psd(const CMat &m)
{
    const CMat herm = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> eig(herm);
    RVec vals = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().adjoint();
}

struct SubgradientProblem
{
    const PhaseOptContext &ctx;
    CMat p0;           // B^H B (joint) or B_s^H B_s (per path)
    CMat basis;        // basis whose diag penalty applies
    RMat jac;          // rows of the reduced Jacobian in use
    std::vector<const CMat *> coeff; // per-subcarrier coefficient blocks
    double gamma = 0.0;
    double target = 0.0;
    int peb_block = 3; // LMI indices e_1..e_3

    RMat fim_of(const CMat &xi) const
    {
        const CMat s_mat = p0 * xi * p0;
        const int dim = static_cast<int>(jac.cols());
        CMat acc = CMat::Zero(dim, dim);
        for (const CMat *c : coeff)
            acc.noalias() += c->adjoint() * s_mat * (*c);
        return (2.0 / ctx.sigma2) * (jac * acc.real() * jac.transpose());
    }

    RVec diag_of(const CMat &xi) const
    {
        // diag of (basis Xi basis^H), real for Hermitian Xi
        return ((basis * xi).cwiseProduct(basis.conjugate())).rowwise().sum().real();
    }

    double objective(const CMat &xi, RMat *fim_out = nullptr) const
    {
        const RMat fim = fim_of(xi);
        RMat inv;
        try
        {
            inv = invert_psd(fim, 1e-14, "sdp objective");
        }
        catch (const DegenerateGeometryError &)
        {
            return std::numeric_limits<double>::infinity();
        }
        if (fim_out)
            *fim_out = fim;
        const double peb2 = inv.topLeftCorner(peb_block, peb_block).trace();
        const RVec v = diag_of(xi).array() - target;
        return peb2 + gamma * v.norm();
    }

    CMat gradient(const CMat &xi) const
    {
        const RMat fim = fim_of(xi);
        RMat inv;
        try
        {
            inv = invert_psd(fim, 1e-14, "sdp gradient");
        }
        catch (const DegenerateGeometryError &)
        {
            // push outward: increasing Xi can only add information
            return -CMat::Identity(xi.rows(), xi.cols());
        }
        // G = F^{-1} E F^{-1} with E selecting the position block
        const RMat g = inv.leftCols(peb_block) * inv.topRows(peb_block);
        const RMat a = jac.transpose() * g * jac;

        CMat grad = CMat::Zero(xi.rows(), xi.cols());
        for (const CMat *c : coeff)
            grad.noalias() -= (*c) * a * c->adjoint();
        grad = (2.0 / ctx.sigma2) * (p0 * grad * p0);

        const RVec v = diag_of(xi).array() - target;
        const double vn = v.norm();
        if (vn > 1e-30)
            grad.noalias() += (gamma / vn) * (basis.adjoint() * v.asDiagonal() * basis);
        return grad;
    }
};

CMat run_subgradient(const SubgradientProblem &prob, CMat xi0, const SdpOptions &opt,
                     double *best_obj_out, bool *fallback_out)
{
    CMat xi = project_psd(xi0);
    CMat best = xi;
    double best_obj = prob.objective(xi);
    const double scale0 = std::max(xi.norm(), 1e-30);

    for (int k = 1; k <= opt.max_iters; ++k)
    {
        const CMat grad = prob.gradient(xi);
        const double gn = grad.norm();
        if (!(gn > 0.0) || !std::isfinite(gn))
            break;
        const double step = opt.step0 * scale0 / (gn * std::sqrt(static_cast<double>(k)));
        xi = project_psd(xi - step * grad);
        const double obj = prob.objective(xi);
        if (obj < best_obj)
        {
            best_obj = obj;
            best = xi;
        }
    }

    if (!std::isfinite(best_obj))
    {
        if (fallback_out)
            *fallback_out = true;
        best = xi0; // uniform initialization
        best_obj = prob.objective(best);
    }
    if (best_obj_out)
        *best_obj_out = best_obj;
    return best;
}

CMat uniform_xi(const CMat &basis, double target)
{
    // c I with c chosen so the mean profile-diagonal hits the target.
    const double c = target * basis.rows() / basis.squaredNorm();
    return c * CMat::Identity(basis.cols(), basis.cols());
}

} // namespace

SdpSolution solve_reduced_sdp(const ChannelParams &prior, const ScenarioConfig &cfg,
                              int n_symbols, const SdpOptions &opt)
{
    const PhaseOptContext ctx = make_phase_context(prior, cfg, n_symbols);
    SubgradientProblem prob{ctx, ctx.basis.adjoint() * ctx.basis, ctx.basis, ctx.jac_reduced, {},
                            (opt.gamma > 0.0) ? opt.gamma : 1e2 / n_symbols,
                            static_cast<double>(n_symbols), 3};
    for (const CMat &c : ctx.coeff)
        prob.coeff.push_back(&c);

    SdpSolution sol;
    const CMat xi0 = uniform_xi(ctx.basis, prob.target);
    sol.xi = run_subgradient(prob, xi0, opt, &sol.objective, &sol.fallback);
    sol.lambda = (ctx.basis * sol.xi * ctx.basis.adjoint()).conjugate();
    return sol;
}

namespace
{

// 4x6 Jacobian of one path's channel parameters with respect to
// [p_s; Delta].
RMat jacobian_single_path(const PositionEta &eta_p, int s, const ScenarioConfig &cfg)
{
    const RMat full = jacobian_position(eta_p, cfg);
    RMat out(4, 6);
    out.topRows(3) = full.block(3 * s, 6 * s, 3, 6);
    out.row(3) = full.row(3 * eta_p.n_paths()).segment(6 * s, 6);
    return out;
}

} // namespace

BlockdiagSolution solve_blockdiag(const ChannelParams &prior, const ScenarioConfig &cfg,
                                  int n_symbols, const SdpOptions &opt)
{
    const int n_paths = prior.n_paths();
    const PhaseOptContext ctx = make_phase_context(prior, cfg, n_symbols);
    const PositionEta eta_p = position_eta_from_channel(prior, cfg);
    const double gamma = (opt.gamma > 0.0) ? opt.gamma : 1e2 / n_symbols;
    const double target = static_cast<double>(n_symbols);

    BlockdiagSolution sol;
    sol.xi_s.resize(n_paths);

    // Decoupled per-path designs.
    std::vector<CMat> lambdas(n_paths);
    std::vector<std::vector<CMat>> coeff_s(n_paths);
    for (int s = 0; s < n_paths; ++s)
    {
        const CMat basis_s = ctx.basis.middleCols(4 * s, 4);
        SubgradientProblem prob{ctx, basis_s.adjoint() * basis_s, basis_s,
                                jacobian_single_path(eta_p, s, cfg), {}, gamma, target, 3};
        coeff_s[s].reserve(ctx.coeff.size());
        for (const CMat &c : ctx.coeff)
            coeff_s[s].push_back(c.block(4 * s, 6 * s, 4, 6));
        for (const CMat &c : coeff_s[s])
            prob.coeff.push_back(&c);

        bool fb = false;
        double obj = 0.0;
        sol.xi_s[s] = run_subgradient(prob, uniform_xi(basis_s, target), opt, &obj, &fb);
        sol.fallback = sol.fallback || fb;
        lambdas[s] = (basis_s * sol.xi_s[s] * basis_s.adjoint()).conjugate();
    }

    // Mixing weights: subgradient on lambda >= 0 against the full PEB.
    std::vector<RMat> fim_parts(n_paths);
    std::vector<RVec> diag_parts(n_paths);
    for (int s = 0; s < n_paths; ++s)
    {
        const CMat s_mat = ctx.basis.adjoint() * lambdas[s].conjugate() * ctx.basis;
        fim_parts[s] = ctx.fim_reduced_from_gram(s_mat);
        diag_parts[s] = lambdas[s].diagonal().real();
    }

    auto weight_objective = [&](const RVec &w) {
        RMat fim = RMat::Zero(fim_parts[0].rows(), fim_parts[0].cols());
        RVec diag = RVec::Zero(diag_parts[0].size());
        for (int s = 0; s < n_paths; ++s)
        {
            fim += w[s] * fim_parts[s];
            diag += w[s] * diag_parts[s];
        }
        RMat inv;
        try
        {
            inv = invert_psd(fim, 1e-14, "weight objective");
        }
        catch (const DegenerateGeometryError &)
        {
            return std::numeric_limits<double>::infinity();
        }
        return inv.topLeftCorner(3, 3).trace() + gamma * (diag.array() - target).matrix().norm();
    };

    RVec w = RVec::Constant(n_paths, 1.0 / n_paths);
    {
        // scale so the mean diagonal matches the target
        RVec diag = RVec::Zero(diag_parts[0].size());
        for (int s = 0; s < n_paths; ++s)
            diag += w[s] * diag_parts[s];
        const double mean = diag.mean();
        if (mean > 0.0)
            w *= target / mean;
    }
    RVec best_w = w;
    double best_obj = weight_objective(w);
    for (int k = 1; k <= opt.max_iters; ++k)
    {
        // numeric subgradient over the few weights
        RVec grad(n_paths);
        const double f0 = weight_objective(w);
        if (!std::isfinite(f0))
            break;
        for (int s = 0; s < n_paths; ++s)
        {
            RVec wp = w;
            const double h = std::max(1e-6, 1e-6 * std::abs(w[s]));
            wp[s] += h;
            grad[s] = (weight_objective(wp) - f0) / h;
        }
        const double gn = grad.norm();
        if (!(gn > 0.0))
            break;
        const double step = opt.step0 * std::max(w.norm(), 1e-12) / (gn * std::sqrt(static_cast<double>(k)));
        w = (w - step * grad).cwiseMax(0.0);
        const double obj = weight_objective(w);
        if (obj < best_obj)
        {
            best_obj = obj;
            best_w = w;
        }
    }

    sol.weights = best_w;
    sol.objective = best_obj;
    sol.lambda = CMat::Zero(ctx.basis.rows(), ctx.basis.rows());
    for (int s = 0; s < n_paths; ++s)
        sol.lambda += best_w[s] * lambdas[s];
    return sol;
}

CMat covariance_factor(const CMat &lambda)
{
    Eigen::SelfAdjointEigenSolver<CMat> eig(0.5 * (lambda + lambda.adjoint()));
    const RVec vals = eig.eigenvalues().cwiseMax(0.0);
    const double vmax = vals.maxCoeff();
    int rank = 0;
    for (int i = 0; i < vals.size(); ++i)
        if (vals[i] > 1e-12 * vmax)
            ++rank;
    if (rank == 0)
        throw std::invalid_argument("covariance_factor: zero covariance");

    // Columns of U Sigma^{1/2} with nonzero weight (the zero-eigenvalue
    // rows of Sigma^{1/2} R contribute nothing).
    CMat factor(lambda.rows(), rank);
    int k = 0;
    for (int i = static_cast<int>(vals.size()) - 1; i >= 0 && k < rank; --i)
    {
        factor.col(k) = eig.eigenvectors().col(i) * std::sqrt(vals[i]);
        ++k;
    }
    return factor;
}

RisProfile gaussian_randomization(const CMat &lambda, int n_symbols, int n_draws,
                                  const ChannelParams &prior, const ScenarioConfig &cfg,
                                  std::mt19937_64 &rng)
{
    const int n_r = static_cast<int>(lambda.rows());
    const CMat factor = covariance_factor(lambda);
    const int rank = static_cast<int>(factor.cols());

    const PhaseOptContext ctx = make_phase_context(prior, cfg, n_symbols);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));

    RisProfile best;
    double best_peb = std::numeric_limits<double>::infinity();
    for (int draw = 0; draw < n_draws; ++draw)
    {
        CMat r(rank, n_symbols);
        for (int col = 0; col < n_symbols; ++col)
            for (int row = 0; row < rank; ++row)
                r(row, col) = Cplx(gauss(rng), gauss(rng));
        CMat wt = factor * r;

        const Cplx ref = wt(n_r - 1, n_symbols - 1);
        if (std::abs(ref) > 0.0)
            wt /= ref;
        CMat w(n_r, n_symbols);
        for (int col = 0; col < n_symbols; ++col)
            for (int row = 0; row < n_r; ++row)
            {
                const Cplx v = wt(row, col);
                const double mag = std::abs(v);
                w(row, col) = (mag > 0.0) ? v / mag : Cplx(1.0, 0.0);
            }

        double peb;
        try
        {
            const CMat v = w.transpose() * ctx.basis;
            peb = peb_from_reduced_fim(ctx.fim_reduced_from_gram(v.adjoint() * v));
        }
        catch (const DegenerateGeometryError &)
        {
            continue;
        }
        if (peb < best_peb)
        {
            best_peb = peb;
            best.w = std::move(w);
        }
    }
    if (!best.w.size())
        throw std::runtime_error("gaussian_randomization: no usable candidate");
    return best;
}

void save_profile_text(const RisProfile &profile, const std::string &path)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("save_profile_text: cannot open " + path);
    out.precision(17);
    out << profile.w.rows() << ' ' << profile.w.cols() << '\n';
    for (Eigen::Index r = 0; r < profile.w.rows(); ++r)
    {
        for (Eigen::Index c = 0; c < profile.w.cols(); ++c)
            out << (c ? " " : "") << profile.w(r, c);
        out << '\n';
    }
    if (!out)
        throw std::runtime_error("save_profile_text: write failed for " + path);
}

RisProfile load_profile_text(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_profile_text: cannot open " + path);
    Eigen::Index rows = 0, cols = 0;
    in >> rows >> cols;
    if (!in || rows < 1 || cols < 1)
        throw std::runtime_error("load_profile_text: bad header in " + path);
    RisProfile p;
    p.w.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            if (!(in >> p.w(r, c)))
                throw std::runtime_error("load_profile_text: truncated matrix in " + path);
    return p;
}

} // namespace risloc
