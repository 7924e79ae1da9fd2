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

#include "risloc/neldermead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace risloc
{

NelderMeadResult nelder_mead(const std::function<double(const RVec &)> &objective,
                             const RVec &x0, const RVec &init_step,
                             const NelderMeadOptions &opt)
{
    const int dim = static_cast<int>(x0.size());
    if (init_step.size() != dim)
        throw std::invalid_argument("nelder_mead: step size dimension mismatch");

    int evals = 0;
    auto eval = [&](const RVec &x) {
        ++evals;
        const double v = objective(x);
        if (!std::isfinite(v))
            throw std::runtime_error("nelder_mead: non-finite objective value");
        return v;
    };

    std::vector<RVec> verts(dim + 1, x0);
    std::vector<double> vals(dim + 1);
    vals[0] = eval(x0);
    for (int i = 0; i < dim; ++i)
    {
        verts[i + 1][i] += (init_step[i] != 0.0) ? init_step[i] : 1e-4;
        vals[i + 1] = eval(verts[i + 1]);
    }

    std::vector<int> order(dim + 1);
    std::iota(order.begin(), order.end(), 0);

    constexpr double alpha = 1.0; // reflection
    constexpr double gamma = 2.0; // expansion
    constexpr double beta = 0.5;  // contraction
    constexpr double delta = 0.5; // shrink

    NelderMeadResult res;
    while (evals < opt.max_evals)
    {
        std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
        const int best = order[0], worst = order[dim], second = order[dim - 1];

        double diam = 0.0;
        for (int i = 1; i <= dim; ++i)
            diam = std::max(diam, (verts[order[i]] - verts[best]).norm());
        if (diam < opt.tol)
        {
            res.converged = true;
            break;
        }

        RVec centroid = RVec::Zero(dim);
        for (int i = 0; i <= dim; ++i)
            if (i != worst)
                centroid += verts[i];
        centroid /= dim;

        const RVec xr = centroid + alpha * (centroid - verts[worst]);
        const double fr = eval(xr);
        if (fr < vals[best])
        {
            const RVec xe = centroid + gamma * (xr - centroid);
            const double fe = eval(xe);
            if (fe < fr)
            {
                verts[worst] = xe;
                vals[worst] = fe;
            }
            else
            {
                verts[worst] = xr;
                vals[worst] = fr;
            }
        }
        else if (fr < vals[second])
        {
            verts[worst] = xr;
            vals[worst] = fr;
        }
        else
        {
            const bool outside = fr < vals[worst];
            const RVec xc = outside ? RVec(centroid + beta * (xr - centroid))
                                    : RVec(centroid - beta * (centroid - verts[worst]));
            const double fc = eval(xc);
            if (fc < std::min(fr, vals[worst]))
            {
                verts[worst] = xc;
                vals[worst] = fc;
            }
            else
            {
                // shrink toward the best vertex
                for (int i = 0; i <= dim; ++i)
                {
                    if (i == best)
                        continue;
                    verts[i] = verts[best] + delta * (verts[i] - verts[best]);
                    vals[i] = eval(verts[i]);
                    if (evals >= opt.max_evals)
                        break;
                }
            }
        }
    }

    const int best = *std::min_element(order.begin(), order.end(),
                                       [&](int a, int b) { return vals[a] < vals[b]; });
    res.x = verts[best];
    res.value = vals[best];
    res.evaluations = evals;
    return res;
}

} // namespace risloc
