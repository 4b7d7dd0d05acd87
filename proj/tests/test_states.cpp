#include "doctest.h"

#include <set>

#include "mstates/geometry.hpp"
#include "mstates/states.hpp"
#include "support.hpp"

using namespace mstates;

namespace {

// k blobs of m points each around well-separated centres.
Matrix blobs(int k, int m, double separation, std::mt19937_64& rng, std::vector<int>* truth = nullptr) {
    Matrix pts = testing::gaussian(k * m, 3, rng);
    for (int b = 0; b < k; ++b)
        for (int i = 0; i < m; ++i) {
            pts(b * m + i, b % 3) += separation * (1 + b / 3);
            if (truth) truth->push_back(b);
        }
    return pts;
}

}  // namespace

TEST_CASE("k = 1 puts the centroid at the mean") {
    std::mt19937_64 rng(1);
    const Matrix pts = testing::gaussian(30, 3, rng);
    const ClusteringRun run = kmeans(pts, 1, 5);
    const Eigen::RowVectorXd mean = pts.colwise().mean();
    CHECK((run.centroids.row(0) - mean).norm() < 1e-12);
    double d = 0.0;
    for (int i = 0; i < 30; ++i) d += (pts.row(i) - mean).norm();
    CHECK(run.d_intra == doctest::Approx(d / 30).epsilon(1e-12));
}

TEST_CASE("k = Fr gives zero d_intra") {
    std::mt19937_64 rng(2);
    const Matrix pts = testing::gaussian(12, 3, rng);
    const ClusteringRun run = kmeans(pts, 12, 3);
    CHECK(run.d_intra == 0.0);
    CHECK(std::set<int>(run.labels.begin(), run.labels.end()).size() == 12);
}

TEST_CASE("bad k is rejected") {
    const Matrix pts = Matrix::Zero(4, 3);
    CHECK_THROWS_AS(kmeans(pts, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(kmeans(pts, 5, 1), std::invalid_argument);
}

TEST_CASE("objective trace never increases") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const Matrix pts = testing::gaussian(40, 3, rng);
        const ClusteringRun run = kmeans(pts, 2 + trial % 7, trial);
        for (std::size_t i = 1; i < run.objective_trace.size(); ++i)
            CHECK(run.objective_trace[i] <= run.objective_trace[i - 1]);
    }
}

TEST_CASE("three planted blobs are recovered") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(100 + seed);
        std::vector<int> truth;
        const Matrix pts = blobs(3, 20, 10.0, rng, &truth);
        const auto runs = kmeans_ensemble(pts, 3, 10, seed);
        CHECK(testing::same_partition(best_run(runs).labels, truth));
    }
}

TEST_CASE("ensemble is reproducible across worker counts") {
    std::mt19937_64 rng(4);
    const Matrix pts = testing::gaussian(50, 3, rng);
    set_worker_count(1);
    const auto a = kmeans_ensemble(pts, 4, 20, 9);
    set_worker_count(4);
    const auto b = kmeans_ensemble(pts, 4, 20, 9);
    set_worker_count(1);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].labels == b[i].labels);
        CHECK(a[i].d_intra == b[i].d_intra);
    }
}

TEST_CASE("best-of-inits d_intra does not grow with k") {
    std::mt19937_64 rng(5);
    const Matrix pts = testing::gaussian(60, 3, rng);
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 6; ++k) {
        const auto runs = kmeans_ensemble(pts, k, 50, 11);
        double best = previous;
        for (const auto& r : runs) best = std::min(best, r.d_intra);
        CHECK(best <= previous);
        previous = best;
    }
}

TEST_CASE("select_optimum argmin and tie rule") {
    OptimizationSurface s;
    s.entries = {{4, 0.5, 0.02, 0, 10}, {5, 0.9, 0.01, 0, 10}, {3, 0.1, 0.001, 0, 10}};
    CHECK(select_optimum(s, 4) == std::pair<int, double>{5, 0.9});

    OptimizationSurface tie;
    tie.entries = {{5, 0.2, 0.01, 0, 10}, {6, 0.4, 0.01, 0, 10}, {6, 0.1, 0.01, 0, 10}};
    CHECK(select_optimum(tie, 4) == std::pair<int, double>{6, 0.1});

    // a penalty hook ranks ahead of sigma
    const TransitionPenalty prefer_eight = [](int k, double) { return k == 6 ? 0L : 3L; };
    CHECK(select_optimum(s, 4, prefer_eight).first == 5);
    CHECK_THROWS_AS(select_optimum(s, 7), std::invalid_argument);
}

TEST_CASE("transition counts") {
    CHECK(transition_counts({0, 0, 0, 0, 0}, 1)(0, 0) == 4);
    const CountMatrix t = transition_counts({0, 0, 1, 0}, 2);
    CHECK(t(0, 0) == 1);
    CHECK(t(0, 1) == 1);
    CHECK(t(1, 0) == 1);
    CHECK(t(1, 1) == 0);
    CHECK_THROWS_AS(transition_counts({0, 3}, 2), std::invalid_argument);
}

TEST_CASE("state model orders states by mean correlation") {
    std::mt19937_64 rng(6);
    std::vector<Matrix> raw;
    std::vector<int> level;
    for (int f = 0; f < 30; ++f) {
        const int lvl = (f / 10) % 3;  // blocks of 10 epochs at three correlation levels
        Matrix c = Matrix::Constant(5, 5, 0.1 + 0.3 * lvl);
        c.diagonal().setOnes();
        raw.push_back(c);
        level.push_back(lvl);
    }
    const StateFit fit = fit_states(raw, 3, 0.0, 10, 7, 2);
    CHECK(fit.model.state_of == level);
    CHECK(fit.model.state_mean_corr[0] < fit.model.state_mean_corr[1]);
    CHECK(fit.model.state_mean_corr[1] < fit.model.state_mean_corr[2]);
    CHECK(testing::same_partition(fit.model.state_of, fit.run.labels));
    long total = 0;
    for (long o : fit.model.occupancy) total += o;
    CHECK(total == 30);
    CHECK(fit.model.transitions.sum() == 29);
    for (int s = 0; s < 3; ++s) {
        long outgoing = fit.model.transitions.row(s).sum();
        long expected = fit.model.occupancy[s] - (fit.model.state_of.back() == s ? 1 : 0);
        CHECK(outgoing == expected);
    }
}

TEST_CASE("four planted correlation structures") {
    // four equidistant structures: identity plus one strong pair each
    std::vector<Matrix> bases;
    for (int b = 0; b < 4; ++b) {
        Matrix c = Matrix::Identity(6, 6);
        c(b, b + 1) = c(b + 1, b) = 0.8;
        bases.push_back(c);
    }
    std::mt19937_64 rng(7);
    std::normal_distribution<double> jitter(0.0, 0.01);
    std::vector<Matrix> raw;
    std::vector<int> truth;
    for (int f = 0; f < 80; ++f) {
        Matrix c = bases[static_cast<std::size_t>(f % 4)];
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j) c(i, j) = c(j, i) = std::clamp(c(i, j) + jitter(rng), -1.0, 1.0);
        raw.push_back(c);
        truth.push_back(f % 4);
    }
    const StateFit fit = fit_states(raw, 4, 0.0, 40, 3, 3);
    CHECK(testing::same_partition(fit.model.state_of, truth));

    // the largest relative drop of mean d_intra is at the planted k
    const auto surface = optimize_over_series(raw, StateSearch{{2, 3, 4, 5, 6}, {0.0}, 40, 3, 3});
    int elbow = 0;
    double best_drop = 1.0;
    for (std::size_t i = 1; i < surface.entries.size(); ++i) {
        const double drop = surface.entries[i].mean_d_intra / surface.entries[i - 1].mean_d_intra;
        if (drop < best_drop) {
            best_drop = drop;
            elbow = surface.entries[i].k;
        }
    }
    CHECK(elbow == 4);
}

TEST_CASE("optimize needs at least two inits") {
    const std::vector<Matrix> raw(5, Matrix::Identity(3, 3));
    CHECK_THROWS_AS(optimize_over_series(raw, StateSearch{{2}, {0.0}, 1, 1, 2}), std::invalid_argument);
}

TEST_CASE("top-down clustering") {
    std::mt19937_64 rng(8);
    std::vector<int> truth;
    const Matrix pts = blobs(2, 25, 20.0, rng, &truth);
    const Matrix d = testing::euclidean_distances(pts);
    const double global = mean_radius(pts);
    const auto one = topdown_cluster(d, global * 1.01, 3);
    CHECK(std::set<int>(one.begin(), one.end()).size() == 1);
    const auto two = topdown_cluster(d, 3.0, 3);
    CHECK(std::set<int>(two.begin(), two.end()).size() == 2);
    CHECK(testing::same_partition(two, truth));
}
