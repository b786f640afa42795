#pragma once

#include <vector>

namespace oracle {

// min c.x  s.t.  A x = b, x >= 0  (b >= 0), dense two-phase simplex with Bland's rule.
// Returns the optimum, or NaN when infeasible.
double simplex_min(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                   const std::vector<double>& c);

// Balanced transportation problem with real masses on a dense cost matrix.
double transport_lp(const std::vector<double>& supply, const std::vector<double>& demand,
                    const std::vector<std::vector<double>>& cost);

}  // namespace oracle
