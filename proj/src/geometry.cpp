#include "mstates/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

namespace mstates {

Matrix similarity_matrix(const std::vector<Matrix>& matrices) {
    const std::size_t fr = matrices.size();
    if (fr < 2) throw std::invalid_argument("similarity_matrix needs at least 2 epochs");
    const Eigen::Index n = matrices.front().rows();
    for (const auto& m : matrices)
        if (m.rows() != n || m.cols() != n) throw std::invalid_argument("similarity_matrix: matrix sizes differ");

    // Diagonal and strict upper triangle packed separately; the strict part
    // carries weight 2 in the mean over all N^2 entries.
    const Eigen::Index packed = n * (n - 1) / 2;
    Matrix diag(n, static_cast<Eigen::Index>(fr));
    Matrix upper(packed, static_cast<Eigen::Index>(fr));
    for (std::size_t f = 0; f < fr; ++f) {
        const auto col = static_cast<Eigen::Index>(f);
        Eigen::Index p = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            diag(i, col) = matrices[f](i, i);
            for (Eigen::Index j = i + 1; j < n; ++j) upper(p++, col) = matrices[f](i, j);
        }
    }

    const double denom = static_cast<double>(n) * static_cast<double>(n);
    Matrix zeta = Matrix::Zero(static_cast<Eigen::Index>(fr), static_cast<Eigen::Index>(fr));
    parallel_for(fr, [&](std::size_t a) {
        const auto ca = static_cast<Eigen::Index>(a);
        for (Eigen::Index cb = ca + 1; cb < static_cast<Eigen::Index>(fr); ++cb) {
            const double d = (diag.col(ca) - diag.col(cb)).cwiseAbs().sum();
            const double u = (upper.col(ca) - upper.col(cb)).cwiseAbs().sum();
            zeta(ca, cb) = (d + 2.0 * u) / denom;
        }
    });
    for (Eigen::Index a = 0; a < zeta.rows(); ++a)
        for (Eigen::Index b = a + 1; b < zeta.cols(); ++b) zeta(b, a) = zeta(a, b);
    return zeta;
}

Embedding classical_mds(const Matrix& dissimilarity, int dimension) {
    const Eigen::Index fr = dissimilarity.rows();
    if (dissimilarity.cols() != fr) throw std::invalid_argument("classical_mds needs a square dissimilarity matrix");
    if (dimension < 1 || dimension > fr - 1)
        throw std::invalid_argument("classical_mds dimension must be in [1, " + std::to_string(fr - 1) + "], got " +
                                    std::to_string(dimension));

    const Matrix squared = dissimilarity.cwiseProduct(dissimilarity);
    const Vector row_mean = squared.rowwise().mean();
    const Vector col_mean = squared.colwise().mean().transpose();
    const double grand_mean = squared.mean();
    Matrix b(fr, fr);
    for (Eigen::Index i = 0; i < fr; ++i)
        for (Eigen::Index j = 0; j < fr; ++j)
            b(i, j) = -0.5 * (squared(i, j) - row_mean(i) - col_mean(j) + grand_mean);
    b = 0.5 * (b + b.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Matrix> solver(b);
    if (solver.info() != Eigen::Success) throw NumericError("classical_mds: eigendecomposition failed");
    const Vector ascending = solver.eigenvalues();
    const Matrix& vectors = solver.eigenvectors();

    Embedding out;
    out.spectrum = ascending.reverse();
    const double largest = ascending.cwiseAbs().maxCoeff();
    const double tol = 1e-12 * largest;

    double negative_mass = 0.0;
    for (Eigen::Index i = 0; i < fr; ++i) {
        if (ascending(i) < -tol) {
            ++out.clipped_count;
            negative_mass += -ascending(i);
        }
    }
    const double total_mass = ascending.cwiseAbs().sum();
    out.clipped_mass = total_mass > 0.0 ? negative_mass / total_mass : 0.0;

    out.coordinates = Matrix::Zero(fr, dimension);
    out.eigenvalues = Vector::Zero(dimension);
    int positive = 0;
    for (int d = 0; d < dimension; ++d) {
        const Eigen::Index src = fr - 1 - d;
        const double lambda = ascending(src);
        if (!(lambda > tol)) continue;
        ++positive;
        out.eigenvalues(d) = lambda;
        Vector column = vectors.col(src) * std::sqrt(lambda);
        Eigen::Index pivot = 0;
        column.cwiseAbs().maxCoeff(&pivot);
        if (column(pivot) < 0.0) column = -column;
        out.coordinates.col(d) = column;
    }
    if (positive < dimension && largest > 0.0)
        spdlog::warn("classical_mds: only {} positive eigenvalues for dimension {}; remaining axes are zero", positive,
                     dimension);
    return out;
}

std::vector<double> step_lengths(const Matrix& coordinates) {
    if (coordinates.rows() < 2) throw std::invalid_argument("step_lengths needs at least 2 points");
    std::vector<double> out(static_cast<std::size_t>(coordinates.rows() - 1));
    for (Eigen::Index i = 0; i + 1 < coordinates.rows(); ++i)
        out[static_cast<std::size_t>(i)] = (coordinates.row(i + 1) - coordinates.row(i)).norm();
    return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("pearson needs two sequences of equal length >= 2");
    const auto n = static_cast<Eigen::Index>(a.size());
    const Eigen::Map<const Vector> x(a.data(), n);
    const Eigen::Map<const Vector> y(b.data(), n);
    const Vector dx = x.array() - x.mean();
    const Vector dy = y.array() - y.mean();
    const double sxx = dx.squaredNorm();
    const double syy = dy.squaredNorm();
    if (sxx == 0.0 || syy == 0.0) throw NumericError("correlation undefined for a constant sequence");
    return dx.dot(dy) / std::sqrt(sxx * syy);
}

std::vector<std::pair<int, double>> dimension_fidelity(const Matrix& dissimilarity, const std::vector<int>& dims) {
    if (dims.empty()) throw std::invalid_argument("dimension_fidelity needs at least one dimension");
    const int fr = static_cast<int>(dissimilarity.rows());
    if (fr < 3) throw std::invalid_argument("dimension_fidelity needs at least 3 epochs");
    const int d_max = fr - 1;
    for (int d : dims)
        if (d < 1 || d > d_max)
            throw std::invalid_argument("dimension " + std::to_string(d) + " outside [1, " + std::to_string(d_max) + "]");

    // Classical MDS axes are nested, so every D is a prefix of the D_max map.
    const Embedding full = classical_mds(dissimilarity, d_max);
    const auto reference = step_lengths(full.coordinates);
    std::vector<std::pair<int, double>> out;
    out.reserve(dims.size());
    for (int d : dims) out.emplace_back(d, pearson(step_lengths(full.coordinates.leftCols(d)), reference));
    return out;
}

}  // namespace mstates
