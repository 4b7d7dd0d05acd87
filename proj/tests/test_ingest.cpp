#include "doctest.h"

#include <cmath>

#include "mstates/ingest.hpp"
#include "support.hpp"

using namespace mstates;

TEST_CASE("three consecutive blanks drop the ticker") {
    const std::string csv =
        "date,AAA,BBB,CCC\n"
        "2020-01-01,10,20,30\n"
        "2020-01-02,11,,31\n"
        "2020-01-03,12,,32\n"
        "2020-01-06,13,,33\n"
        "2020-01-07,14,24,34\n";
    const PricePanel panel = parse_prices(csv);
    REQUIRE(panel.size() == 2);
    CHECK(panel.tickers == std::vector<std::string>{"AAA", "CCC"});
    REQUIRE(panel.dropped.size() == 1);
    CHECK(panel.dropped[0].ticker == "BBB");
}

TEST_CASE("two blanks are within the default policy and get forward-filled") {
    const std::string csv =
        "date,AAA,BBB\n"
        "2020-01-01,10,100\n"
        "2020-01-02,11,\n"
        "2020-01-03,12,NaN\n"
        "2020-01-06,13,102\n";
    const PricePanel panel = parse_prices(csv);
    REQUIRE(panel.size() == 2);
    CHECK(panel.prices(1, 1) == 100.0);
    CHECK(panel.prices(1, 2) == 100.0);
    CHECK(panel.prices(1, 3) == 102.0);
}

TEST_CASE("single blank between 100 and 102 is filled with 100") {
    const PricePanel panel = parse_prices("date,X\n2020-01-01,100\n2020-01-02,\n2020-01-03,102\n");
    CHECK(panel.prices(0, 1) == 100.0);
}

TEST_CASE("dense panel is retained unchanged") {
    const PricePanel panel = parse_prices("date,A,B\n2020-01-01,1.5,2.25\n2020-01-02,1.75,2.5\n");
    CHECK(panel.size() == 2);
    CHECK(panel.dropped.empty());
    CHECK(panel.prices(0, 0) == 1.5);
    CHECK(panel.prices(1, 1) == 2.5);
}

TEST_CASE("missing first entry and non-positive prices drop the ticker") {
    const PricePanel panel = parse_prices("date,A,B,C\n2020-01-01,,1,1\n2020-01-02,1,1,0\n2020-01-03,1,1,1\n");
    CHECK(panel.tickers == std::vector<std::string>{"B"});
    CHECK(panel.dropped.size() == 2);
}

TEST_CASE("malformed input raises DataError") {
    CHECK_THROWS_AS(parse_prices("date,A\n2020-13-01,1\n"), DataError);
    CHECK_THROWS_AS(parse_prices("date,A\n2020-01-02,1\n2020-01-01,1\n"), DataError);
    CHECK_THROWS_AS(parse_prices("date,A\n2020-01-01,abc\n"), DataError);
    CHECK_THROWS_AS(parse_prices("date,A\n2020-01-01,1,2\n"), DataError);
}

TEST_CASE("log returns of [1, e, e^2] are [1, 1]; constant prices give zeros") {
    PricePanel panel;
    panel.tickers = {"A", "B"};
    panel.dates = {"2020-01-01", "2020-01-02", "2020-01-03"};
    panel.prices.resize(2, 3);
    panel.prices << 1.0, std::exp(1.0), std::exp(2.0), 5.0, 5.0, 5.0;
    const ReturnPanel r = log_returns(panel);
    REQUIRE(r.returns.cols() == 2);
    CHECK(r.returns(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.returns(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.returns(1, 0) == 0.0);
    CHECK(r.returns(1, 1) == 0.0);
    CHECK(r.dates.size() == 2);
}

TEST_CASE("exp-cumsum of returns reproduces the filled prices") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 0.02);
    PricePanel panel;
    panel.tickers = {"A", "B", "C"};
    const int days = 400;
    panel.prices.resize(3, days);
    for (int t = 0; t < days; ++t) panel.dates.push_back("d" + std::to_string(t));
    for (int i = 0; i < 3; ++i) {
        double p = 50.0 + 10 * i;
        for (int t = 0; t < days; ++t) {
            panel.prices(i, t) = p;
            p *= std::exp(n(rng));
        }
    }
    const ReturnPanel r = log_returns(panel);
    for (int i = 0; i < 3; ++i) {
        double cum = 0.0;
        for (int t = 1; t < days; ++t) {
            cum += r.returns(i, t - 1);
            const double rebuilt = panel.prices(i, 0) * std::exp(cum);
            CHECK(std::abs(rebuilt - panel.prices(i, t)) / panel.prices(i, t) < 1e-12);
        }
    }
}

TEST_CASE("panel write/read round trip is lossless and idempotent") {
    testing::ScratchDir dir("ingest");
    const std::string csv =
        "date,A,B,C\n"
        "2020-01-01,10.1,0.3,7\n"
        "2020-01-02,,0.30000000000000004,\n"
        "2020-01-03,10.7,0.29,7.25\n";
    PricePanel panel = parse_prices(csv);
    panel.sector_of = {{"A", "Tech"}, {"B", "Energy"}, {"C", "Tech"}};
    write_panel(dir / "p.csv", panel);
    const PricePanel back = read_panel(dir / "p.csv");
    CHECK(back.tickers == panel.tickers);
    CHECK(back.dates == panel.dates);
    CHECK(back.prices == panel.prices);
    CHECK(back.sector_of == panel.sector_of);
    write_panel(dir / "q.csv", back);
    CHECK(read_file(dir / "p.csv") == read_file(dir / "q.csv"));
    CHECK(read_file(dir / "p.csv.json") == read_file(dir / "q.csv.json"));
}

TEST_CASE("sector file needs the ticker,sector header") {
    testing::ScratchDir dir("sectors");
    write_file(dir / "good.csv", "ticker,sector\nA,Tech\nB,Energy\n");
    write_file(dir / "bad.csv", "name,group\nA,Tech\n");
    const SectorMap map = load_sectors(dir / "good.csv");
    CHECK(map.at("A") == "Tech");
    CHECK(map.size() == 2);
    CHECK_THROWS_AS(load_sectors(dir / "bad.csv"), DataError);
}
