#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mstates/common.hpp"
#include "mstates/corrmat.hpp"
#include "mstates/ingest.hpp"

namespace mstates {

/// A slice of the price history around an event. Either centred on a date
/// with a fixed odd width, or given by explicit start and end dates.
struct EventWindow {
    std::string name;
    std::string start_date;
    std::string end_date;
    std::string center_date;  // empty when anchored by start/end
    PricePanel prices;
};

/// Symmetric slice of width_days price days with the centre in the middle.
EventWindow cut_window(const PricePanel& panel, const std::string& center_date, int width_days = 125,
                       const std::string& name = {});
/// Price days start_date..end_date inclusive.
EventWindow cut_window_range(const PricePanel& panel, const std::string& start_date, const std::string& end_date,
                             const std::string& name = {});

enum class Regime { Normal, Critical };

std::string to_string(Regime regime);

struct TrajectoryConfig {
    EpochSpec epochs{20, 1};
    double epsilon = 0.0;
    int dimension = 3;
    double threshold = 0.4;
};

struct TrajectoryReport {
    std::string name;
    std::string start_date;
    std::string end_date;
    std::string center_date;
    Matrix coordinates;  // Fr x D
    std::vector<double> step_lengths;
    std::vector<double> axis_variances;  // population variance per MDS axis
    double var_x = 0.0;
    double var_y = 0.0;
    double var_z = 0.0;
    double var_ratio = 0.0;  // var_y / var_x
    Regime classification = Regime::Normal;
    bool zero_variance = false;
    bool axis_order_ok = true;  // var_x >= var_y >= var_z
};

/// MDS of a dissimilarity matrix followed by the variance-ratio test.
TrajectoryReport analyze_dissimilarity(const Matrix& zeta, int dimension = 3, double threshold = 0.4);

TrajectoryReport analyze_trajectory(const EventWindow& window, const TrajectoryConfig& config = {});

struct CatalogEvent {
    std::string name;
    std::string center_date;
    std::string start_date;
    std::string end_date;
};

/// CSV with header `name,center_date` and optional `start_date,end_date`
/// columns; a row with both start and end uses them instead of the centre.
std::vector<CatalogEvent> load_catalog(const std::string& path);

struct CatalogError {
    std::string name;
    std::string message;
};

struct CatalogResult {
    std::vector<TrajectoryReport> reports;
    std::vector<CatalogError> errors;
};

/// Rows fail independently; failures are collected, the batch continues.
CatalogResult classify_catalog(const PricePanel& panel, const std::vector<CatalogEvent>& catalog,
                               const TrajectoryConfig& config = {}, int width_days = 125);

}  // namespace mstates
