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

#ifndef RISLOC_NELDERMEAD_HPP
#define RISLOC_NELDERMEAD_HPP

#include <functional>

#include "risloc/types.hpp"

namespace risloc
{

struct NelderMeadOptions
{
    double tol = 1e-9;    // simplex diameter stop
    int max_evals = 2000; // objective evaluation budget
};

struct NelderMeadResult
{
    RVec x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

// Standard reflection/expansion/contraction/shrink simplex descent.
// The initial simplex is x0 plus one step along each coordinate.
// The returned value never exceeds the objective at x0. Throws
// std::runtime_error if the objective produces a non-finite value.
NelderMeadResult nelder_mead(const std::function<double(const RVec &)> &objective,
                             const RVec &x0, const RVec &init_step,
                             const NelderMeadOptions &opt = {});

} // namespace risloc

#endif
