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

#include "risloc/coarse.hpp"

#include <algorithm>
#include <cmath>

#include "risloc/geometry.hpp"
#include "risloc/steering.hpp"

namespace risloc
{

CoarseModel CoarseModel::from(const ScenarioConfig &cfg, const RisLayout &layout)
{
    const Spherical bs = spherical_from_position(cfg.p_bs, layout.center);
    CoarseModel m;
    m.theta_el = bs.phi_el;
    m.theta_az = bs.phi_az;
    m.lambda = cfg.wavelength();
    m.spacing = layout.spacing;
    m.delta_f = cfg.subcarrier_spacing;
    return m;
}

double CoarseModel::omega2(double phi_el, double phi_az) const
{
    const double u = std::sin(theta_el) * std::cos(theta_az) + std::sin(phi_el) * std::cos(phi_az);
    return 2.0 * kPi * u * spacing / lambda;
}

double CoarseModel::omega3(double phi_el) const
{
    const double v = std::cos(theta_el) + std::cos(phi_el);
    return 2.0 * kPi * v * spacing / lambda;
}

namespace
{

// |r(w)^H u|^2 / ||r(w)||^2 expressed through two trigonometric
// polynomials so each grid point costs O(length) instead of a full
// matrix-vector product.
struct ModeObjective
{
    CVec num;  // numerator coefficients: f(w) = sum_k num[k] e^{-j k w}
    RVec den0; // denominator cosine series: ||r||^2 = den0[0] + 2 sum_m Re(denc[m] e^{j m w})
    CVec denc; // m = 1 .. len-1
    bool const_den = false;
    double den_const = 1.0;

    double operator()(double w) const
    {
        const Cplx e = std::polar(1.0, -w);
        Cplx f(0.0, 0.0);
        for (int k = static_cast<int>(num.size()) - 1; k >= 0; --k)
            f = f * e + num[k];
        double den = den_const;
        if (!const_den)
        {
            const Cplx ep = std::polar(1.0, w);
            Cplx acc(0.0, 0.0);
            for (int m = static_cast<int>(denc.size()) - 1; m >= 1; --m)
                acc = (acc + denc[m]) * ep;
            den = den0[0] + 2.0 * acc.real();
        }
        return std::norm(f) / std::max(den, 1e-300);
    }
};

ModeObjective make_mode_objective(const CVec &u, int mode, int n_subcarriers,
                                  const KroneckerProfile &profile)
{
    ModeObjective obj;
    if (mode == 1)
    {
        if (u.size() != n_subcarriers)
            throw std::invalid_argument("fit_mode_frequency: mode-1 factor length mismatch");
        obj.num = u; // r^H u = sum_k u_k e^{-j k w}
        obj.const_den = true;
        obj.den_const = static_cast<double>(n_subcarriers);
        return obj;
    }
    const CMat &t = (mode == 2) ? profile.t1_mat : profile.t2_mat;
    if (u.size() != t.cols())
        throw std::invalid_argument("fit_mode_frequency: factor length mismatch with profile");
    // r(w) = T^T c(w);  r^H u = sum_k (conj(T) u)[k] e^{-j k w}
    obj.num = t.conjugate() * u;
    // ||r(w)||^2 = c^H (conj(T) T^T) c, collapsed over diagonals
    const CMat m = t.conjugate() * t.transpose();
    const int len = static_cast<int>(m.rows());
    obj.den0 = RVec::Zero(1);
    obj.denc = CVec::Zero(len);
    for (int k = 0; k < len; ++k)
        obj.den0[0] += m(k, k).real();
    for (int d = 1; d < len; ++d)
    {
        Cplx acc(0.0, 0.0);
        for (int k = 0; k + d < len; ++k)
            acc += m(k, k + d);
        obj.denc[d] = acc;
    }
    return obj;
}

// Golden-section maximization on [lo, hi].
double golden_max(const ModeObjective &f, double lo, double hi, double tol)
{
    constexpr double phi = 0.61803398874989484820;
    double a = lo, b = hi;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol)
    {
        if (f1 < f2)
        {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
        else
        {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

CVec mode_vector(double w, int mode, int n_subcarriers, const KroneckerProfile &profile)
{
    if (mode == 1)
        return phase_ramp(n_subcarriers, w);
    if (mode == 2)
        return profile.t1_mat.transpose() * phase_ramp(static_cast<int>(profile.t1_mat.rows()), w);
    return profile.t2_mat.transpose() * phase_ramp(static_cast<int>(profile.t2_mat.rows()), w);
}

} // namespace

ModeFit fit_mode_frequency(const CVec &u, int mode, int n_subcarriers,
                           const KroneckerProfile &profile, int grid, double refine_tol)
{
    if (mode < 1 || mode > 3)
        throw std::invalid_argument("fit_mode_frequency: mode must be 1, 2 or 3");
    if (u.squaredNorm() <= 0.0)
        throw std::invalid_argument("fit_mode_frequency: zero factor");

    const ModeObjective obj = make_mode_objective(u, mode, n_subcarriers, profile);

    const double step = 2.0 * kPi / grid;
    double best_w = 0.0, best_v = -1.0;
    for (int i = 0; i < grid; ++i)
    {
        const double w = -kPi + step * (i + 1);
        const double v = obj(w);
        if (v > best_v)
        {
            best_v = v;
            best_w = w;
        }
    }
    const double w_hat = golden_max(obj, best_w - step, best_w + step, refine_tol);

    const CVec r = mode_vector(w_hat, mode, n_subcarriers, profile);
    ModeFit fit;
    fit.omega = w_hat;
    fit.alpha = (r.adjoint() * u)(0) / r.squaredNorm();
    return fit;
}

PathAngles frequencies_to_geometry(double w1, double w2, double w3, const CoarseModel &model)
{
    PathAngles out;
    out.tau = -w1 / (2.0 * kPi * model.delta_f);

    const double scale = model.lambda / (2.0 * kPi * model.spacing);
    const double cos_el = w3 * scale - std::cos(model.theta_el);
    if (std::abs(cos_el) > 1.0)
        throw InfeasibleFrequencyError("frequencies_to_geometry: elevation cosine out of range");
    out.phi_el = std::acos(cos_el);

    const double sin_el = std::sin(out.phi_el);
    const double u = w2 * scale - std::sin(model.theta_el) * std::cos(model.theta_az);
    if (sin_el < 1e-12)
    {
        if (std::abs(u) > 1e-9)
            throw InfeasibleFrequencyError("frequencies_to_geometry: zenith path with nonzero azimuth frequency");
        out.phi_az = 0.0;
        return out;
    }
    const double cos_az = u / sin_el;
    if (std::abs(cos_az) > 1.0)
        throw InfeasibleFrequencyError("frequencies_to_geometry: azimuth cosine out of range");
    // The x-o-z mounted RIS cannot resolve the sign of the y component;
    // targets are assumed in the y >= 0 half-space it radiates into.
    out.phi_az = std::acos(cos_az);
    return out;
}

CpdOmpResult cpd_omp(const CMat &y, const KroneckerProfile &profile,
                     const CoarseModel &model, const CpdOmpOptions &opt)
{
    const int n = static_cast<int>(y.rows());
    if (y.cols() != profile.n_symbols())
        throw std::invalid_argument("cpd_omp: Y columns must equal profile symbols");

    CpdOmpResult res;
    if (y.squaredNorm() <= 0.0)
        return res; // empty signal -> no paths

    CMat residual = y;
    const int budget = (opt.n_paths > 0) ? opt.n_paths : opt.max_paths;
    for (int s = 0; s < budget; ++s)
    {
        if (residual.squaredNorm() <= 0.0)
            break;
        const Tensor3 tens = tensorize(residual, profile.t1(), profile.t2());
        const Cpd1Result cpd = rank1_cpd(tens, opt.cpd_max_iter, opt.cpd_tol);
        if (!cpd.converged)
            res.cpd_warning = true;

        CoarsePath path;
        const ModeFit f1 = fit_mode_frequency(cpd.u1, 1, n, profile, opt.omega_grid, opt.omega_refine_tol);
        const ModeFit f2 = fit_mode_frequency(cpd.u2, 2, n, profile, opt.omega_grid, opt.omega_refine_tol);
        const ModeFit f3 = fit_mode_frequency(cpd.u3, 3, n, profile, opt.omega_grid, opt.omega_refine_tol);
        path.w1 = f1.omega;
        path.w2 = f2.omega;
        path.w3 = f3.omega;
        path.alpha1 = f1.alpha;
        try
        {
            path.geo = frequencies_to_geometry(path.w1, path.w2, path.w3, model);
        }
        catch (const InfeasibleFrequencyError &)
        {
            path.feasible = false;
        }

        // Deflate the fitted rank-1 model component (orthogonal projection).
        const CVec r1 = mode_vector(path.w1, 1, n, profile);
        const CVec r2 = mode_vector(path.w2, 2, n, profile);
        const CVec r3 = mode_vector(path.w3, 3, n, profile);
        CVec kron23(r2.size() * r3.size());
        for (int a = 0; a < r2.size(); ++a)
            for (int b = 0; b < r3.size(); ++b)
                kron23[a * r3.size() + b] = r2[a] * r3[b];
        const CMat atom = r1 * kron23.transpose();
        const double atom_norm2 = atom.squaredNorm();
        if (atom_norm2 <= 0.0)
            break;
        const Cplx coef = (atom.conjugate().cwiseProduct(residual)).sum() / atom_norm2;
        residual.noalias() -= coef * atom;
        path.removed_energy = std::norm(coef) * atom_norm2;

        res.paths.push_back(path);
        res.residual_energy.push_back(residual.squaredNorm());

        if (opt.n_paths <= 0 && path.removed_energy < opt.delta)
            break;
    }
    return res;
}

DistanceGrid DistanceGrid::uniform(double lo, double hi, int count)
{
    if (count < 1 || hi <= lo)
        throw std::invalid_argument("DistanceGrid: need hi > lo and count >= 1");
    DistanceGrid g;
    g.samples.resize(count);
    const double step = (count == 1) ? 0.0 : (hi - lo) / (count - 1);
    for (int i = 0; i < count; ++i)
        g.samples[i] = lo + i * step;
    return g;
}

DistanceGrid DistanceGrid::for_scenario(const ScenarioConfig &cfg, const EstimatorOptions &opt)
{
    const auto [f_lo, f_hi] = fresnel_bounds(cfg.layout, cfg.wavelength());
    double lo = (opt.dist_grid_min > 0.0) ? opt.dist_grid_min : std::max(0.5, f_lo);
    double hi = (opt.dist_grid_max > 0.0) ? opt.dist_grid_max : std::min(15.0, f_hi);
    if (hi <= lo)
        hi = lo + 10.0; // tiny surfaces have no meaningful Fresnel band
    return uniform(lo, hi, opt.dist_grid_size);
}

CMat build_distance_dictionary(double w1_hat, double phi_el_hat, double phi_az_hat,
                               const DistanceGrid &grid, const CMat &w_profile,
                               const ScenarioConfig &cfg)
{
    if (grid.size() < 1)
        throw std::invalid_argument("build_distance_dictionary: empty grid");
    const int n = cfg.n_subcarriers;
    const int t = static_cast<int>(w_profile.cols());
    const double lambda = cfg.wavelength();
    const CVec r1 = phase_ramp(n, w1_hat);

    CMat d(static_cast<Eigen::Index>(n) * t, grid.size());
    for (int m = 0; m < grid.size(); ++m)
    {
        const Vec3 p = position_from_spherical(grid.samples[m], phi_el_hat, phi_az_hat, cfg.layout.center);
        const CVec b = combined_steering_b(p, cfg.p_bs, cfg.layout, lambda);
        const CVec q = w_profile.transpose() * b; // (b^T W)^T
        // vec with the subcarrier index fastest (column-major stacking)
        for (int tt = 0; tt < t; ++tt)
            d.col(m).segment(static_cast<Eigen::Index>(tt) * n, n) = r1 * q[tt];
    }
    return d;
}

LassoResult lasso_gram(const CMat &gram, const CVec &h, double y_norm2, int n_blocks,
                       const DistanceGrid &grid, const LassoOptions &opt)
{
    const int m_tot = static_cast<int>(gram.rows());
    if (n_blocks < 1 || m_tot != n_blocks * grid.size())
        throw std::invalid_argument("lasso_gram: dimensions inconsistent with grid blocks");

    const double xi = (opt.xi > 0.0) ? opt.xi : opt.xi_scale * h.cwiseAbs().maxCoeff();
    if (xi <= 0.0)
        throw std::runtime_error("lasso_gram: non-positive regularization");

    // Cyclic coordinate descent with the complex soft-threshold prox; each
    // full sweep costs one Gram-vector product and identifies supports far
    // faster than full-gradient steps on these highly correlated columns.
    CVec zeta = CVec::Zero(m_tot);
    CVec gz = CVec::Zero(m_tot); // G zeta, maintained incrementally
    LassoResult res;
    res.xi = xi;
    double prev_obj = 0.5 * y_norm2;
    res.objective.push_back(prev_obj);
    for (int sweep = 0; sweep < opt.max_iters; ++sweep)
    {
        for (int j = 0; j < m_tot; ++j)
        {
            const double gjj = gram(j, j).real();
            if (gjj <= 0.0)
                continue;
            const Cplx r = h[j] - (gz[j] - gjj * zeta[j]);
            const double mag = std::abs(r);
            const Cplx next = (mag > xi) ? (r / mag) * ((mag - xi) / gjj) : Cplx(0.0, 0.0);
            const Cplx delta = next - zeta[j];
            if (delta != Cplx(0.0, 0.0))
            {
                gz.noalias() += gram.col(j) * delta;
                zeta[j] = next;
            }
        }
        const double quad =
            0.5 * (zeta.adjoint() * gz)(0).real() - (h.adjoint() * zeta)(0).real() + 0.5 * y_norm2;
        const double obj = quad + xi * zeta.cwiseAbs().sum();
        res.objective.push_back(obj);
        res.iterations = sweep + 1;
        if (std::abs(prev_obj - obj) <= opt.tol * std::max(std::abs(prev_obj), std::abs(obj)))
            break;
        prev_obj = obj;
    }

    res.coeff_abs = zeta.cwiseAbs();
    if (res.coeff_abs.maxCoeff() <= 0.0)
        throw std::runtime_error("lasso_gram: all-zero solution (regularizer too large)");

    res.d_hat.resize(n_blocks);
    for (int s = 0; s < n_blocks; ++s)
    {
        Eigen::Index rel = 0;
        res.coeff_abs.segment(static_cast<Eigen::Index>(s) * grid.size(), grid.size()).maxCoeff(&rel);
        res.d_hat[s] = grid.samples[static_cast<size_t>(rel)];
    }
    return res;
}

LassoResult lasso_distances(const CVec &y, const std::vector<CMat> &dicts,
                            const DistanceGrid &grid, const LassoOptions &opt)
{
    if (dicts.empty())
        throw std::invalid_argument("lasso_distances: no dictionaries");
    const int n_blocks = static_cast<int>(dicts.size());
    const int m = grid.size();
    CMat d(y.size(), static_cast<Eigen::Index>(n_blocks) * m);
    for (int s = 0; s < n_blocks; ++s)
    {
        if (dicts[s].rows() != y.size() || dicts[s].cols() != m)
            throw std::invalid_argument("lasso_distances: dictionary shape mismatch");
        d.middleCols(static_cast<Eigen::Index>(s) * m, m) = dicts[s];
    }
    const CMat gram = d.adjoint() * d;
    const CVec h = d.adjoint() * y;
    return lasso_gram(gram, h, y.squaredNorm(), n_blocks, grid, opt);
}

void build_lasso_gram(const CMat &y, const std::vector<CoarsePath> &paths,
                      const DistanceGrid &grid, const CMat &w_profile,
                      const ScenarioConfig &cfg, CMat &gram_out, CVec &h_out)
{
    const int n = cfg.n_subcarriers;
    const int m = grid.size();
    const int n_blocks = static_cast<int>(paths.size());
    const double lambda = cfg.wavelength();

    // V_s = W^T B_s stacked over paths; T x (n_blocks * m)
    CMat v(w_profile.cols(), static_cast<Eigen::Index>(n_blocks) * m);
    std::vector<CVec> r1s(n_blocks);
    for (int s = 0; s < n_blocks; ++s)
    {
        CMat b(cfg.layout.size(), m);
        for (int k = 0; k < m; ++k)
        {
            const Vec3 p = position_from_spherical(grid.samples[k], paths[s].geo.phi_el,
                                                   paths[s].geo.phi_az, cfg.layout.center);
            b.col(k) = combined_steering_b(p, cfg.p_bs, cfg.layout, lambda);
        }
        v.middleCols(static_cast<Eigen::Index>(s) * m, m).noalias() = w_profile.transpose() * b;
        r1s[s] = phase_ramp(n, paths[s].w1);
    }

    const CMat vhv = v.adjoint() * v;
    gram_out.resize(vhv.rows(), vhv.cols());
    h_out.resize(vhv.rows());
    for (int s = 0; s < n_blocks; ++s)
    {
        const CVec g_s = (r1s[s].adjoint() * y).transpose(); // length T
        h_out.segment(static_cast<Eigen::Index>(s) * m, m) =
            v.middleCols(static_cast<Eigen::Index>(s) * m, m).adjoint() * g_s;
        for (int s2 = 0; s2 < n_blocks; ++s2)
        {
            const Cplx r_inner = (r1s[s].adjoint() * r1s[s2])(0);
            gram_out.block(static_cast<Eigen::Index>(s) * m, static_cast<Eigen::Index>(s2) * m, m, m) =
                r_inner * vhv.block(static_cast<Eigen::Index>(s) * m, static_cast<Eigen::Index>(s2) * m, m, m);
        }
    }
}

std::vector<Cplx> estimate_gains(const CMat &y, const std::vector<double> &w1_hats,
                                 const std::vector<Vec3> &positions, const CMat &w_profile,
                                 const ScenarioConfig &cfg)
{
    const int n_paths = static_cast<int>(positions.size());
    if (w1_hats.size() != positions.size() || n_paths < 1)
        throw std::invalid_argument("estimate_gains: path count mismatch");

    const double lambda = cfg.wavelength();
    CMat b(cfg.layout.size(), n_paths);
    for (int s = 0; s < n_paths; ++s)
        b.col(s) = combined_steering_b(positions[s], cfg.p_bs, cfg.layout, lambda);

    const CMat q = std::sqrt(cfg.tx_power) * (b.transpose() * w_profile); // S x T
    // Right pseudo-inverse through Q Q^H; rank deficiency means the path
    // responses through the profile are not separable.
    const CMat qqh = q * q.adjoint();
    Eigen::SelfAdjointEigenSolver<CMat> eig(qqh);
    const double lmax = eig.eigenvalues().maxCoeff();
    if (!(lmax > 0.0) || eig.eigenvalues().minCoeff() < 1e-12 * lmax)
        throw DegenerateGeometryError("estimate_gains: Q is rank-deficient");
    const CMat y_qp = y * (q.adjoint() * qqh.inverse()); // N x S

    std::vector<Cplx> rho(n_paths);
    for (int s = 0; s < n_paths; ++s)
    {
        const CVec c = phase_ramp(cfg.n_subcarriers, w1_hats[s]);
        rho[s] = (c.adjoint() * y_qp.col(s))(0) / static_cast<double>(cfg.n_subcarriers);
    }
    return rho;
}

CoarseEstimate coarse_estimate(const CMat &y, const KroneckerProfile &profile,
                               const ScenarioConfig &cfg, const EstimatorOptions &opt,
                               int n_paths)
{
    CoarseEstimate out;
    const CoarseModel model = CoarseModel::from(cfg, cfg.layout);

    CpdOmpOptions omp_opt;
    omp_opt.n_paths = n_paths;
    omp_opt.delta = opt.remark1_delta_scale * cfg.n_subcarriers * cfg.n_symbols * cfg.noise_var;
    omp_opt.omega_grid = opt.omega_grid;
    omp_opt.omega_refine_tol = opt.omega_refine_tol;
    out.omp = cpd_omp(y, profile, model, omp_opt);

    std::vector<CoarsePath> paths;
    for (const CoarsePath &p : out.omp.paths)
        if (p.feasible)
            paths.push_back(p);
    if (paths.empty())
        throw std::runtime_error("coarse_estimate: no feasible paths recovered");
    std::sort(paths.begin(), paths.end(),
              [](const CoarsePath &a, const CoarsePath &b) { return a.geo.tau < b.geo.tau; });

    const DistanceGrid grid = DistanceGrid::for_scenario(cfg, opt);
    const CMat w = profile.assemble();

    CMat gram;
    CVec h;
    build_lasso_gram(y, paths, grid, w, cfg, gram, h);
    LassoOptions lasso_opt;
    lasso_opt.xi_scale = opt.lasso_xi_scale;
    lasso_opt.max_iters = opt.lasso_max_iters;
    lasso_opt.tol = opt.lasso_tol;
    out.lasso = lasso_gram(gram, h, y.squaredNorm(), static_cast<int>(paths.size()), grid, lasso_opt);

    std::vector<Vec3> positions(paths.size());
    std::vector<double> w1s(paths.size());
    for (size_t s = 0; s < paths.size(); ++s)
    {
        positions[s] = position_from_spherical(out.lasso.d_hat[s], paths[s].geo.phi_el,
                                               paths[s].geo.phi_az, cfg.layout.center);
        w1s[s] = paths[s].w1;
    }
    const std::vector<Cplx> gains = estimate_gains(y, w1s, positions, w, cfg);

    out.eta.paths.resize(paths.size());
    for (size_t s = 0; s < paths.size(); ++s)
        out.eta.paths[s] = PathParams{gains[s], paths[s].geo.phi_el, paths[s].geo.phi_az,
                                      out.lasso.d_hat[s], paths[s].geo.tau};
    return out;
}

} // namespace risloc
