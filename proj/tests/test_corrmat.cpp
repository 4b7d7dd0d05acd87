#include "doctest.h"

#include "mstates/corrmat.hpp"
#include "support.hpp"

using namespace mstates;

namespace {

ReturnPanel random_returns(int n, int t, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ReturnPanel panel;
    panel.returns = testing::gaussian(n, t, rng, 0.01);
    for (int i = 0; i < n; ++i) panel.tickers.push_back("T" + std::to_string(i));
    for (int d = 0; d < t; ++d) panel.dates.push_back("d" + std::to_string(d));
    return panel;
}

}  // namespace

TEST_CASE("perfectly dependent pairs") {
    Matrix r(3, 30);
    std::mt19937_64 rng(1);
    r.row(0) = testing::gaussian(1, 30, rng);
    r.row(1) = 2.0 * r.row(0);
    r.row(2) = -r.row(0);
    const Matrix c = pearson_correlation(r, 0, 30);
    CHECK(c(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c(0, 2) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(c.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("zero-variance rows give zero off-diagonal and unit diagonal") {
    Matrix r(2, 10);
    r.row(0).setConstant(0.3);
    r.row(1).setLinSpaced(10, 0.0, 1.0);
    int zero_rows = 0;
    const Matrix c = pearson_correlation(r, 0, 10, &zero_rows);
    CHECK(zero_rows == 1);
    CHECK(c(0, 1) == 0.0);
    CHECK(c(0, 0) == 1.0);
}

TEST_CASE("epoch count follows the closed form") {
    EpochSpec spec{20, 1};
    CHECK(spec.frame_count(3522) == 3503);
    CHECK(spec.frame_count(3458) == 3439);
    CHECK(spec.frame_count(20) == 1);
    CHECK(EpochSpec{20, 10}.frame_count(100) == 9);
    CHECK_THROWS_AS(spec.frame_count(19), DataError);
    CHECK_THROWS_AS((EpochSpec{0, 1}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((EpochSpec{20, 0}.validate()), std::invalid_argument);
}

TEST_CASE("every epoch matrix is a valid correlation matrix") {
    const auto series = epoch_correlations(random_returns(8, 60, 5), EpochSpec{20, 3});
    CHECK(series.size() == 14);
    for (const auto& m : series.matrices) {
        CHECK((m.values - m.values.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK((m.values.diagonal().array() == 1.0).all());
        CHECK(m.values.cwiseAbs().maxCoeff() <= 1.0);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(m.values, Eigen::EigenvaluesOnly);
        CHECK(eig.eigenvalues().minCoeff() > -1e-12);
    }
    CHECK(series.matrices[1].start_date == "d3");
    CHECK(series.matrices[1].epoch_index == 2);
}

TEST_CASE("epoch results do not depend on the worker count") {
    const ReturnPanel panel = random_returns(10, 200, 9);
    set_worker_count(1);
    const auto one = epoch_correlations(panel, {});
    set_worker_count(4);
    const auto four = epoch_correlations(panel, {});
    set_worker_count(1);
    REQUIRE(one.size() == four.size());
    for (std::size_t f = 0; f < one.size(); ++f) CHECK(one.matrices[f].values == four.matrices[f].values);
}

TEST_CASE("power map formula, identity and monotonicity") {
    Matrix m(2, 2);
    m << 1.0, 0.5, -0.5, 1.0;
    const Matrix p = power_map(m, 1.0);
    CHECK(p(0, 1) == doctest::Approx(0.25));
    CHECK(p(1, 0) == doctest::Approx(-0.25));

    std::mt19937_64 rng(2);
    const Matrix c = testing::random_correlation(12, 30, rng);
    CHECK(power_map(c, 0.0) == c);
    const Matrix q = power_map(c, 0.6);
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        CHECK(std::abs(q(i)) <= std::abs(c(i)));
        CHECK((q(i) > 0) == (c(i) > 0));
    }
    CHECK(power_map(power_map(c, 0.0), 0.6) == q);
    CHECK_THROWS_AS(power_map(c, -0.1), std::invalid_argument);
}

TEST_CASE("power map lifts the zero-eigenvalue degeneracy of singular matrices") {
    std::mt19937_64 rng(11);
    const Matrix c = testing::random_correlation(100, 20, rng);
    auto near_zero = [](const Matrix& m) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
        return (eig.eigenvalues().array().abs() < 1e-10).count();
    };
    const auto before = near_zero(c);
    CHECK(before >= 81);
    CHECK(near_zero(power_map(c, 0.001)) < before);
}

TEST_CASE("series binary round trip") {
    testing::ScratchDir dir("series");
    auto series = power_map(epoch_correlations(random_returns(5, 50, 4), EpochSpec{10, 5}), 0.3);
    write_series(dir / "s.bin", series);
    const auto back = read_series(dir / "s.bin");
    CHECK(back.tickers == series.tickers);
    CHECK(back.start_dates() == series.start_dates());
    CHECK(back.spec.length == 10);
    CHECK(back.spec.shift == 5);
    REQUIRE(back.size() == series.size());
    for (std::size_t f = 0; f < series.size(); ++f) {
        CHECK(back.matrices[f].values == series.matrices[f].values);
        CHECK(back.matrices[f].epsilon_applied == 0.3);
    }
    write_file(dir / "bad.bin", "{\"format\":\"nope\"}\n");
    CHECK_THROWS_AS(read_series(dir / "bad.bin"), DataError);
}
