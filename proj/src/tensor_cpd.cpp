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

#include "risloc/tensor_cpd.hpp"

#include <cmath>

namespace risloc
{

Tensor3 tensorize(const CMat &y, int t1, int t2)
{
    if (t1 < 1 || t2 < 1 || y.cols() != static_cast<Eigen::Index>(t1) * t2)
        throw std::invalid_argument("tensorize: T must equal t1 * t2");
    Tensor3 t;
    t.m1 = y;
    t.t1 = t1;
    t.t2 = t2;
    return t;
}

CMat untensorize(const Tensor3 &t) { return t.m1; }

CMat KroneckerProfile::assemble() const
{
    const int nx = static_cast<int>(t1_mat.rows());
    const int nz = static_cast<int>(t2_mat.rows());
    CMat w(nx * nz, n_symbols());
    for (int ix = 0; ix < nx; ++ix)
        for (int iz = 0; iz < nz; ++iz)
            for (int a = 0; a < t1(); ++a)
                for (int b = 0; b < t2(); ++b)
                    w(ix * nz + iz, a * t2() + b) = t1_mat(ix, a) * t2_mat(iz, b);
    return w;
}

KroneckerProfile build_kronecker_profile(int n_x, int n_z, int t1, int t2, std::mt19937_64 &rng)
{
    if (t1 < 1 || t2 < 1)
        throw std::invalid_argument("build_kronecker_profile: T1, T2 must be >= 1");
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    KroneckerProfile p;
    p.t1_mat.resize(n_x, t1);
    p.t2_mat.resize(n_z, t2);
    for (int c = 0; c < t1; ++c)
        for (int r = 0; r < n_x; ++r)
            p.t1_mat(r, c) = std::polar(1.0, phase(rng));
    for (int c = 0; c < t2; ++c)
        for (int r = 0; r < n_z; ++r)
            p.t2_mat(r, c) = std::polar(1.0, phase(rng));
    return p;
}

namespace
{

// Dominant left singular vector via the self-adjoint eigensolver of X X^H.
CVec dominant_left_singular(const CMat &x)
{
    const CMat gram = x * x.adjoint();
    Eigen::SelfAdjointEigenSolver<CMat> eig(gram);
    return eig.eigenvectors().col(gram.rows() - 1); // eigenvalues ascending
}

} // namespace

Cpd1Result rank1_cpd(const Tensor3 &t, int max_iter, double tol)
{
    const int n = t.n();
    const int t1 = t.t1;
    const int t2 = t.t2;
    const double tensor_norm2 = t.m1.squaredNorm();
    if (tensor_norm2 <= 0.0)
        throw std::invalid_argument("rank1_cpd: zero tensor");

    // Mode-2 and mode-3 unfoldings for the HOSVD initialization.
    CMat x2(t1, n * t2);
    CMat x3(t2, n * t1);
    for (int a = 0; a < t1; ++a)
        for (int i = 0; i < n; ++i)
            for (int b = 0; b < t2; ++b)
            {
                const Cplx v = t.m1(i, a * t2 + b);
                x2(a, i * t2 + b) = v;
                x3(b, i * t1 + a) = v;
            }

    CVec u1 = dominant_left_singular(t.m1);
    CVec u2 = dominant_left_singular(x2);
    CVec u3 = dominant_left_singular(x3);

    Cpd1Result res;
    double prev_fit = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it)
    {
        // u1 <- X1 (u2 (x) u3)^* / ||u2 (x) u3||^2
        CVec kron23(t1 * t2);
        for (int a = 0; a < t1; ++a)
            for (int b = 0; b < t2; ++b)
                kron23[a * t2 + b] = u2[a] * u3[b];
        u1 = t.m1 * kron23.conjugate() / kron23.squaredNorm();

        // u2[a] = u1^H X1(:, a-th slice) u3^* / (||u1||^2 ||u3||^2)
        const double n13 = u1.squaredNorm() * u3.squaredNorm();
        for (int a = 0; a < t1; ++a)
            u2[a] = (u1.adjoint() * t.m1.middleCols(a * t2, t2) * u3.conjugate())(0) / n13;

        // u3[b] = sum_a u2[a]^* u1^H X1(:, a*t2+b) / (||u1||^2 ||u2||^2)
        const double n12 = u1.squaredNorm() * u2.squaredNorm();
        Eigen::RowVectorXcd u1h_x = u1.adjoint() * t.m1; // 1 x (t1*t2)
        for (int b = 0; b < t2; ++b)
        {
            Cplx acc(0.0, 0.0);
            for (int a = 0; a < t1; ++a)
                acc += std::conj(u2[a]) * u1h_x[a * t2 + b];
            u3[b] = acc / n12;
        }

        // Explicit residual; the expanded inner-product form cancels
        // catastrophically near an exact fit.
        for (int a = 0; a < t1; ++a)
            for (int b = 0; b < t2; ++b)
                kron23[a * t2 + b] = u2[a] * u3[b];
        const double fit = (t.m1 - u1 * kron23.transpose()).norm();

        res.iterations = it + 1;
        res.fit = fit;
        res.fit_history.push_back(fit);
        if (std::isfinite(prev_fit) &&
            std::abs(prev_fit - fit) <= tol * std::max(1.0, std::sqrt(tensor_norm2)))
        {
            res.converged = true;
            break;
        }
        prev_fit = fit;
    }

    res.u1 = u1;
    res.u2 = u2;
    res.u3 = u3;
    return res;
}

} // namespace risloc
