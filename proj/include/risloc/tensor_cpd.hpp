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

#ifndef RISLOC_TENSOR_CPD_HPP
#define RISLOC_TENSOR_CPD_HPP

#include <random>

#include "risloc/types.hpp"

namespace risloc
{

// Third-order tensor stored as its mode-1 unfolding: an N x (T1*T2)
// matrix whose column index is t1 * T2 + t2. That ordering is fixed
// project-wide so the two Kronecker factors of the profile stay aligned
// with tensor modes 2 and 3.
struct Tensor3
{
    CMat m1; // N x (T1*T2)
    int t1 = 0;
    int t2 = 0;

    int n() const { return static_cast<int>(m1.rows()); }
    Cplx operator()(int i, int j, int k) const { return m1(i, j * t2 + k); }
};

Tensor3 tensorize(const CMat &y, int t1, int t2);
CMat untensorize(const Tensor3 &t);

// Profile W = T1 (x) T2 with i.i.d. uniform random phases in both factors.
struct KroneckerProfile
{
    CMat t1_mat; // N_x x T1
    CMat t2_mat; // N_z x T2

    int t1() const { return static_cast<int>(t1_mat.cols()); }
    int t2() const { return static_cast<int>(t2_mat.cols()); }
    int n_symbols() const { return t1() * t2(); }
    int n_elements() const { return static_cast<int>(t1_mat.rows() * t2_mat.rows()); }

    // Assemble the full N_x N_z x T1 T2 profile matrix.
    CMat assemble() const;
};

KroneckerProfile build_kronecker_profile(int n_x, int n_z, int t1, int t2, std::mt19937_64 &rng);

struct Cpd1Result
{
    CVec u1, u2, u3;
    double fit = 0.0; // residual Frobenius norm at return
    std::vector<double> fit_history;
    int iterations = 0;
    bool converged = false;
};

// Best rank-1 approximation by alternating least squares with HOSVD
// initialization. Stops when the relative fit change drops below tol.
// Throws std::invalid_argument on a zero tensor; a non-converged run
// returns the best iterate with converged = false.
Cpd1Result rank1_cpd(const Tensor3 &t, int max_iter = 200, double tol = 1e-8);

} // namespace risloc

#endif
