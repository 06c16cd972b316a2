#pragma once

#include "apsde/types.hpp"

namespace apsde
{

struct LpResult
{
    double value = 0;
    Vector x;
    int pivots = 0;
    bool optimal = false;
    bool unbounded = false;
};

/*!
 * maximize c'x subject to A x <= b, x >= 0, with b >= 0 so that the origin
 * is feasible.
 *
 * Dense tableau simplex. Entering columns follow Dantzig's rule (lowest
 * index on ties); after 50 consecutive degenerate pivots it switches to
 * Bland's rule until the objective improves, so the pivot sequence is
 * deterministic and cannot cycle. Ratio-test ties go to the smallest basic
 * index.
 */
LpResult solve_lp_max(Matrix const& a, Vector const& b, Vector const& c,
                      int max_pivots = 1000000);

}  // namespace apsde
