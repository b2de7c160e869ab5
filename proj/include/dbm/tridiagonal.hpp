// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

namespace dbm {

// Eigenvalues of the real symmetric tridiagonal matrix with main diagonal
// `diagonal` (length n) and first off-diagonal `off_diagonal` (length n-1),
// by the implicit QL method with Wilkinson-type shifts. Sorted ascending.
//
// Throws ConsistencyError if an eigenvalue fails to converge in 60 sweeps.
std::vector<double> symmetric_tridiagonal_eigenvalues(std::span<const double> diagonal,
                                                      std::span<const double> off_diagonal);

}  // namespace dbm
