#pragma once

#include <utility>
#include <vector>

#include "mstates/common.hpp"

namespace mstates {

/// zeta(a, b) = mean over all N^2 entries of |C_a - C_b|. Symmetric, zero
/// diagonal, non-negative.
Matrix similarity_matrix(const std::vector<Matrix>& matrices);

/// Classical (Torgerson) MDS result.
struct Embedding {
    Matrix coordinates;         // Fr x D
    Vector eigenvalues;         // D retained eigenvalues, descending, >= 0
    Vector spectrum;            // every double-centring eigenvalue, descending
    int clipped_count = 0;      // negative eigenvalues dropped
    double clipped_mass = 0.0;  // sum|negative| / sum|all|

    int dimension() const { return static_cast<int>(coordinates.cols()); }
};

/// B = -1/2 J (zeta o zeta) J, coordinates = eigenvectors * sqrt(eigenvalue)
/// for the D largest eigenvalues. Non-positive eigenvalues yield zero
/// columns. In each column the entry of largest magnitude is made
/// non-negative. Requires 1 <= D <= Fr - 1.
Embedding classical_mds(const Matrix& dissimilarity, int dimension);

/// Euclidean distances between consecutive rows.
std::vector<double> step_lengths(const Matrix& coordinates);

/// For each D in `dims`, the Pearson correlation between the consecutive-step
/// distances of the D-dimensional embedding and those of the Fr-1
/// dimensional one.
std::vector<std::pair<int, double>> dimension_fidelity(const Matrix& dissimilarity, const std::vector<int>& dims);

/// Pearson correlation of two equal-length sequences; throws NumericError if
/// either is constant.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace mstates
