#include "mstates/ingest.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include "json.hpp"
#include <spdlog/spdlog.h>

namespace mstates {

namespace {

std::optional<double> parse_cell(const std::string& raw, std::size_t row, const std::string& ticker) {
    const std::string cell = trim(raw);
    if (cell.empty() || cell == "NaN" || cell == "nan") return std::nullopt;
    std::size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(cell, &consumed);
    } catch (const std::exception&) {
        consumed = 0;
    }
    if (consumed != cell.size() || !std::isfinite(value))
        throw DataError("unparsable price '" + cell + "' for " + ticker + " on data row " +
                        std::to_string(row + 1));
    return value;
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) lines.push_back(line);
    }
    return lines;
}

}  // namespace

PricePanel parse_prices(const std::string& csv_text, const ContinuityPolicy& policy) {
    if (policy.max_consecutive_missing < 0)
        throw std::invalid_argument("max_consecutive_missing must be >= 0");

    const auto lines = csv_lines(csv_text);
    if (lines.empty()) throw DataError("price file is empty");

    auto header = split(lines.front(), ',');
    for (auto& h : header) h = trim(h);
    if (header.size() < 2 || header.front() != "date")
        throw DataError("price header must be 'date,TICKER1,...'");
    const std::vector<std::string> all_tickers(header.begin() + 1, header.end());
    const std::size_t n_all = all_tickers.size();
    const std::size_t n_rows = lines.size() - 1;
    if (n_rows == 0) throw DataError("price file has no data rows");

    std::vector<std::string> dates;
    dates.reserve(n_rows);
    std::vector<std::vector<std::optional<double>>> raw(n_all, std::vector<std::optional<double>>(n_rows));

    for (std::size_t r = 0; r < n_rows; ++r) {
        const auto fields = split(lines[r + 1], ',');
        if (fields.size() != header.size())
            throw DataError("data row " + std::to_string(r + 1) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(header.size()));
        const std::string date = trim(fields.front());
        if (!is_iso_date(date)) throw DataError("invalid date '" + date + "' on data row " + std::to_string(r + 1));
        if (!dates.empty() && date <= dates.back())
            throw DataError("dates are not strictly increasing at '" + date + "'");
        dates.push_back(date);
        for (std::size_t k = 0; k < n_all; ++k) raw[k][r] = parse_cell(fields[k + 1], r, all_tickers[k]);
    }

    PricePanel panel;
    panel.dates = std::move(dates);
    std::vector<std::size_t> kept;

    for (std::size_t k = 0; k < n_all; ++k) {
        const auto& series = raw[k];
        std::string reason;
        if (!series.front()) {
            reason = "missing first entry";
        } else {
            int run = 0;
            int longest = 0;
            for (const auto& v : series) {
                if (!v) {
                    longest = std::max(longest, ++run);
                } else {
                    run = 0;
                    if (*v <= 0.0 && reason.empty()) reason = "non-positive price " + format_double(*v);
                }
            }
            if (reason.empty() && longest > policy.max_consecutive_missing)
                reason = std::to_string(longest) + " consecutive missing entries";
        }
        if (reason.empty()) {
            kept.push_back(k);
        } else {
            spdlog::warn("dropping ticker {}: {}", all_tickers[k], reason);
            panel.dropped.push_back({all_tickers[k], reason});
        }
    }

    panel.prices.resize(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(n_rows));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto& series = raw[kept[i]];
        panel.tickers.push_back(all_tickers[kept[i]]);
        double last = *series.front();
        for (std::size_t t = 0; t < n_rows; ++t) {
            if (series[t]) last = *series[t];
            panel.prices(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = last;
        }
    }
    return panel;
}

PricePanel load_prices(const std::string& path, const ContinuityPolicy& policy) {
    return parse_prices(read_file(path), policy);
}

SectorMap load_sectors(const std::string& path) {
    const auto lines = csv_lines(read_file(path));
    if (lines.empty() || trim(lines.front()) != "ticker,sector")
        throw DataError("sector file header must be 'ticker,sector'");
    SectorMap map;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = split(lines[r], ',');
        if (fields.size() != 2) throw DataError("sector row " + std::to_string(r) + " must have 2 fields");
        const auto ticker = trim(fields[0]);
        const auto sector = trim(fields[1]);
        if (ticker.empty() || sector.empty()) throw DataError("empty ticker or sector on row " + std::to_string(r));
        if (!map.emplace(ticker, sector).second) throw DataError("duplicate ticker '" + ticker + "' in sector file");
    }
    return map;
}

ReturnPanel log_returns(const PricePanel& panel) {
    const Eigen::Index n_dates = panel.prices.cols();
    if (n_dates < 2) throw DataError("need at least two price dates to form returns");
    ReturnPanel out;
    out.tickers = panel.tickers;
    out.dates.assign(panel.dates.begin(), panel.dates.end() - 1);
    out.sector_of = panel.sector_of;
    out.returns.resize(panel.prices.rows(), n_dates - 1);
    for (Eigen::Index k = 0; k < panel.prices.rows(); ++k)
        for (Eigen::Index t = 0; t + 1 < n_dates; ++t)
            out.returns(k, t) = std::log(panel.prices(k, t + 1)) - std::log(panel.prices(k, t));
    return out;
}

void write_panel(const std::string& path, const PricePanel& panel) {
    std::string csv = "date";
    for (const auto& t : panel.tickers) csv += "," + t;
    csv += "\n";
    for (std::size_t t = 0; t < panel.dates.size(); ++t) {
        csv += panel.dates[t];
        for (Eigen::Index k = 0; k < panel.prices.rows(); ++k)
            csv += "," + format_double(panel.prices(k, static_cast<Eigen::Index>(t)));
        csv += "\n";
    }
    write_file(path, csv);

    nlohmann::ordered_json meta;
    meta["format"] = "mstates-panel-v1";
    meta["N"] = panel.tickers.size();
    meta["T_tot"] = panel.dates.size();
    meta["dropped"] = nlohmann::ordered_json::array();
    for (const auto& d : panel.dropped) meta["dropped"].push_back({{"ticker", d.ticker}, {"reason", d.reason}});
    meta["sector_of"] = nlohmann::ordered_json::object();
    for (const auto& [ticker, sector] : panel.sector_of) meta["sector_of"][ticker] = sector;
    write_file(path + ".json", meta.dump(2) + "\n");
}

PricePanel read_panel(const std::string& path) {
    PricePanel panel = load_prices(path, ContinuityPolicy{0});
    const std::string sidecar = path + ".json";
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_file(sidecar));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad panel sidecar '" + sidecar + "': " + e.what());
    }
    if (meta.value("N", std::size_t{0}) != panel.tickers.size() ||
        meta.value("T_tot", std::size_t{0}) != panel.dates.size())
        throw DataError("panel sidecar does not match '" + path + "'");
    for (const auto& d : meta.at("dropped"))
        panel.dropped.push_back({d.at("ticker").get<std::string>(), d.at("reason").get<std::string>()});
    for (const auto& [ticker, sector] : meta.at("sector_of").items()) panel.sector_of[ticker] = sector.get<std::string>();
    return panel;
}

}  // namespace mstates
