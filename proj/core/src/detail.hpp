#pragma once

#include "mfg/problem.hpp"

namespace mfg::detail {

// Writes p_{k,i} = sum_a c_a psi_k(x_{a,i}) into `out` (resized to r x N).
void moment_into(const Trajectories& x, const DiscreteMeasure& measure, const BasisSet& basis,
                 CoefficientPath& out, int threads);

}  // namespace mfg::detail
