#pragma once

#include <cstddef>
#include <vector>

#include "qualpipe/domain.hpp"

namespace qualpipe {

// Integer column bounds for the assignment program: column j's sum must
// end in [lower[j], upper[j]]. epsilon is the slack actually in force
// (after any widening).
struct LpBounds {
  std::vector<long long> lower;
  std::vector<long long> upper;
  double epsilon = 0.0;
};

// L_j = floor(2*|D|*p_j*(1-eps)), U_j = ceil(2*|D|*p_j*(1+eps)), evaluated
// with a 1e-9 rounding guard so products that are integers in exact
// arithmetic round as integers. If the bounds cannot admit any assignment
// (each instance takes 2 distinct attributes), eps is widened (0 -> 0.01,
// then doubled, capped at 0.99) until they can; the widened value is
// recorded in the result. Throws InfeasibleError when even 0.99 fails.
LpBounds compute_bounds(const AttributeSet& priors, std::size_t n_instances,
                        double epsilon);

// Exact maximizer of sum_{i,j} assign[i][j] * scores[i][j] subject to every
// row picking exactly 2 distinct attributes and every column sum lying in
// [lower[j], upper[j]]. Reduction: rows start on their 2 highest-scoring
// attributes (optimal ignoring column bounds), then a successive-shortest-
// path min-cost flow over the column exchange graph repairs the column
// sums at minimum objective loss. Deterministic: ties prefer the lowest
// instance index, then the lowest attribute index. Throws InfeasibleError.
AssignmentMatrix solve_assignment(const AffinityMatrix& aff,
                                  const LpBounds& bounds);

// Verification oracle: enumerates every row-choice combination, filtered by
// the column bounds; first maximum in enumeration order wins. Guarded by
// C(N,2)^|D| <= 10^7 (TooLargeError).
AssignmentMatrix brute_force_assignment(const AffinityMatrix& aff,
                                        const LpBounds& bounds);

}  // namespace qualpipe
