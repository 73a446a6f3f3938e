#pragma once

#include <vector>

namespace steep {

/// True iff the smallest singular value of the matrix with the given
/// columns is <= threshold times the largest one.
bool rank_deficient(const std::vector<std::vector<double>>& vectors, double threshold);

/// Orthonormal basis of the hyperplane orthogonal to g (n-1 columns).
/// Deterministic for a given g.
std::vector<std::vector<double>> orthonormal_complement(const std::vector<double>& g);

/// Eigenvalues of a symmetric matrix (ascending).
std::vector<double> symmetric_eigenvalues(const std::vector<std::vector<double>>& m);

/// Smallest singular value of a square matrix given as rows.
double smallest_singular_value(const std::vector<std::vector<double>>& rows);

}  // namespace steep
