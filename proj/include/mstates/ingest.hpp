#pragma once

#include <map>
#include <string>
#include <vector>

#include "mstates/common.hpp"

namespace mstates {

using SectorMap = std::map<std::string, std::string>;

struct ContinuityPolicy {
    /// A ticker with a longer run of missing raw entries is dropped.
    int max_consecutive_missing = 2;
};

struct DroppedTicker {
    std::string ticker;
    std::string reason;
};

/// Daily adjusted closes, one row per ticker, one column per trading date.
/// Gaps have already been forward-filled; every price is > 0.
struct PricePanel {
    std::vector<std::string> tickers;
    std::vector<std::string> dates;
    Matrix prices;  // N x T_tot
    SectorMap sector_of;
    std::vector<DroppedTicker> dropped;

    std::size_t size() const { return tickers.size(); }
};

/// Log-returns; column t is dated at the start of the interval [t, t+1].
struct ReturnPanel {
    std::vector<std::string> tickers;
    std::vector<std::string> dates;
    Matrix returns;  // N x (T_tot - 1)
    SectorMap sector_of;
};

/// Parses a `date,TICKER1,...` CSV. Empty cells and the literal `NaN` are
/// missing. Continuity is tested on the raw data before forward-filling; a
/// ticker whose first entry is missing, or that has a non-positive price, is
/// dropped with a diagnostic.
PricePanel parse_prices(const std::string& csv_text, const ContinuityPolicy& policy = {});
PricePanel load_prices(const std::string& path, const ContinuityPolicy& policy = {});

/// `ticker,sector` CSV.
SectorMap load_sectors(const std::string& path);

ReturnPanel log_returns(const PricePanel& panel);

/// Panel file: the filled prices in the same CSV layout as the input, with a
/// JSON sidecar at `<path>.json` holding N, T_tot, dropped tickers and the
/// sector map.
void write_panel(const std::string& path, const PricePanel& panel);
PricePanel read_panel(const std::string& path);

}  // namespace mstates
