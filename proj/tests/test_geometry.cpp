#include "doctest.h"

#include "mstates/geometry.hpp"
#include "support.hpp"

using namespace mstates;

namespace {

double max_distance_error(const Matrix& coords, const Matrix& expected) {
    return (testing::euclidean_distances(coords) - expected).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("zeta of identical matrices is zero") {
    std::mt19937_64 rng(1);
    const Matrix c = testing::random_correlation(6, 20, rng);
    const Matrix z = similarity_matrix({c, c, c});
    CHECK(z.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zeta between all-ones and identity for N = 2") {
    const Matrix z = similarity_matrix({Matrix::Ones(2, 2), Matrix::Identity(2, 2)});
    CHECK(z(0, 1) == 0.5);
    CHECK(z(1, 0) == 0.5);
}

TEST_CASE("zeta matches a scalar triple-loop oracle") {
    std::mt19937_64 rng(2);
    std::vector<Matrix> mats;
    for (int i = 0; i < 3; ++i) mats.push_back(testing::random_correlation(9, 15, rng));
    const Matrix z = similarity_matrix(mats);
    for (std::size_t a = 0; a < mats.size(); ++a)
        for (std::size_t b = 0; b < mats.size(); ++b) {
            double sum = 0.0;
            for (int i = 0; i < 9; ++i)
                for (int j = 0; j < 9; ++j) sum += std::abs(mats[a](i, j) - mats[b](i, j));
            CHECK(std::abs(z(a, b) - sum / 81.0) < 1e-14);
        }
}

TEST_CASE("zeta is a metric on random epochs") {
    std::mt19937_64 rng(3);
    std::vector<Matrix> mats;
    for (int i = 0; i < 25; ++i) mats.push_back(testing::random_correlation(7, 12, rng));
    const Matrix z = similarity_matrix(mats);
    CHECK(z == z.transpose());
    CHECK(z.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK(z.minCoeff() >= 0.0);
    std::uniform_int_distribution<int> pick(0, 24);
    for (int t = 0; t < 500; ++t) {
        const int a = pick(rng), b = pick(rng), c = pick(rng);
        CHECK(z(a, c) <= z(a, b) + z(b, c) + 1e-15);
    }
}

TEST_CASE("unit square is recovered in two dimensions") {
    Matrix pts(4, 2);
    pts << 0, 0, 1, 0, 1, 1, 0, 1;
    const Matrix d = testing::euclidean_distances(pts);
    const Embedding e = classical_mds(d, 2);
    CHECK(max_distance_error(e.coordinates, d) < 1e-9);
}

TEST_CASE("all-equal points map to the origin") {
    const Embedding e = classical_mds(Matrix::Zero(5, 5), 3);
    CHECK(e.coordinates.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("random 3-D points are recovered exactly") {
    std::mt19937_64 rng(4);
    const Matrix pts = testing::gaussian(50, 3, rng);
    const Matrix d = testing::euclidean_distances(pts);
    const Embedding e = classical_mds(d, 3);
    CHECK(max_distance_error(e.coordinates, d) < 1e-8);
    CHECK(e.eigenvalues.size() == 3);
    CHECK(e.eigenvalues(0) >= e.eigenvalues(1));
    CHECK(e.eigenvalues(1) >= e.eigenvalues(2));
}

TEST_CASE("embedding follows a permutation of the input") {
    std::mt19937_64 rng(5);
    const Matrix pts = testing::gaussian(12, 3, rng);
    const Matrix d = testing::euclidean_distances(pts);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(12);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 12, rng);
    const Matrix dp = perm * d * perm.transpose();
    const Matrix a = classical_mds(d, 3).coordinates;
    const Matrix b = classical_mds(dp, 3).coordinates;
    // same rows up to the per-column reflection fixed by the sign convention
    const Matrix pa = perm * a;
    for (int c = 0; c < 3; ++c) {
        const double same = (pa.col(c) - b.col(c)).cwiseAbs().maxCoeff();
        const double flipped = (pa.col(c) + b.col(c)).cwiseAbs().maxCoeff();
        CHECK(std::min(same, flipped) < 1e-8);
    }
}

TEST_CASE("embedding is deterministic and sign-normalised") {
    std::mt19937_64 rng(6);
    std::vector<Matrix> mats;
    for (int i = 0; i < 30; ++i) mats.push_back(testing::random_correlation(6, 10, rng));
    const Matrix z = similarity_matrix(mats);
    const Embedding a = classical_mds(z, 3);
    const Embedding b = classical_mds(z, 3);
    CHECK(a.coordinates == b.coordinates);
    for (int c = 0; c < 3; ++c) {
        Eigen::Index arg;
        a.coordinates.col(c).cwiseAbs().maxCoeff(&arg);
        CHECK(a.coordinates(arg, c) >= 0.0);
    }
    CHECK(a.clipped_mass >= 0.0);
    CHECK(a.clipped_mass <= 1.0);
}

TEST_CASE("non-Euclidean input reports clipped eigenvalues") {
    Matrix d(3, 3);
    d << 0, 1, 5, 1, 0, 1, 5, 1, 0;  // violates the triangle inequality
    const Embedding e = classical_mds(d, 2);
    CHECK(e.clipped_count >= 1);
    CHECK(e.clipped_mass > 0.0);
}

TEST_CASE("dimension argument is validated") {
    const Matrix d = Matrix::Zero(4, 4);
    CHECK_THROWS_AS(classical_mds(d, 0), std::invalid_argument);
    CHECK_THROWS_AS(classical_mds(d, 4), std::invalid_argument);
    CHECK_THROWS_AS(classical_mds(Matrix::Zero(3, 4), 1), std::invalid_argument);
}

TEST_CASE("step lengths") {
    Matrix line(5, 3);
    for (int i = 0; i < 5; ++i) line.row(i) << 2.0 * i, 0.0, 0.0;
    for (double s : step_lengths(line)) CHECK(s == doctest::Approx(2.0));

    std::mt19937_64 rng(7);
    Matrix path = testing::gaussian(40, 3, rng, 0.01);
    for (int i = 1; i < 40; ++i) path.row(i) += path.row(i - 1);
    path.bottomRows(20).col(0).array() += 5.0;
    const auto steps = step_lengths(path);
    std::vector<double> sorted = steps;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];
    CHECK(std::count_if(steps.begin(), steps.end(), [&](double s) { return s > 5 * median; }) == 1);
}

TEST_CASE("dimension fidelity grows with dimension") {
    std::mt19937_64 rng(8);
    Matrix pts = testing::gaussian(40, 6, rng);
    const double scales[] = {4.0, 2.0, 1.2, 0.8, 0.3, 0.1};
    for (int c = 0; c < 6; ++c) pts.col(c) *= scales[c];
    const Matrix d = testing::euclidean_distances(pts);
    const auto fid = dimension_fidelity(d, {1, 2, 3, 4, 39});
    REQUIRE(fid.size() == 5);
    for (std::size_t i = 1; i < 4; ++i) CHECK(fid[i].second >= fid[i - 1].second);
    CHECK(fid.back().second == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pearson of a constant sequence is a numeric error") {
    CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), NumericError);
}
