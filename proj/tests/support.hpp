#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "mstates/common.hpp"

namespace testing {

// Fresh scratch directory under the system temp dir, removed on destruction.
struct ScratchDir {
    std::filesystem::path path;

    explicit ScratchDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() / ("mstates_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

inline mstates::Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> n(0.0, sd);
    mstates::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n(rng);
    return m;
}

// Pairwise Euclidean distances between rows.
inline mstates::Matrix euclidean_distances(const mstates::Matrix& points) {
    const Eigen::Index n = points.rows();
    mstates::Matrix d = mstates::Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (points.row(i) - points.row(j)).norm();
    return d;
}

// Random correlation matrix from T samples of N independent normals.
inline mstates::Matrix random_correlation(int n, int t, std::mt19937_64& rng) {
    mstates::Matrix x = gaussian(n, t, rng);
    for (Eigen::Index i = 0; i < n; ++i) {
        x.row(i).array() -= x.row(i).mean();
        x.row(i) /= x.row(i).norm();
    }
    mstates::Matrix c = x * x.transpose();
    c = c.cwiseMax(-1.0).cwiseMin(1.0);
    c.diagonal().setOnes();
    return c;
}

// Same partition up to relabelling.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j)
            if ((a[i] == a[j]) != (b[i] == b[j])) return false;
    return true;
}

// Trajectory-like cloud whose y/x variance ratio is planted exactly: axes are
// decorrelated, centred and rescaled to variances (1, ratio, ratio / 4).
inline mstates::Matrix planted_cloud(int n, double ratio, std::mt19937_64& rng) {
    mstates::Matrix pts = gaussian(n, 3, rng);
    pts.rowwise() -= pts.colwise().mean();
    Eigen::SelfAdjointEigenSolver<mstates::Matrix> eig(pts.transpose() * pts / n);
    pts = pts * eig.eigenvectors();
    const double target[3] = {ratio / 4, ratio, 1.0};
    for (int c = 0; c < 3; ++c) pts.col(c) *= std::sqrt(target[c] / (pts.col(c).squaredNorm() / n));
    return pts;
}

}  // namespace testing
