#include "mstates/trajectory.hpp"

#include <algorithm>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mstates/geometry.hpp"

namespace mstates {

namespace {

std::size_t date_index(const PricePanel& panel, const std::string& date) {
    const auto it = std::lower_bound(panel.dates.begin(), panel.dates.end(), date);
    if (it == panel.dates.end() || *it != date) throw DataError("date " + date + " is not a trading day in the panel");
    return static_cast<std::size_t>(it - panel.dates.begin());
}

PricePanel slice(const PricePanel& panel, std::size_t first, std::size_t count) {
    PricePanel out;
    out.tickers = panel.tickers;
    out.sector_of = panel.sector_of;
    out.dates.assign(panel.dates.begin() + static_cast<std::ptrdiff_t>(first),
                     panel.dates.begin() + static_cast<std::ptrdiff_t>(first + count));
    out.prices = panel.prices.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
    return out;
}

}  // namespace

std::string to_string(Regime regime) { return regime == Regime::Critical ? "CRITICAL" : "NORMAL"; }

EventWindow cut_window(const PricePanel& panel, const std::string& center_date, int width_days, const std::string& name) {
    if (width_days < 3 || width_days % 2 == 0)
        throw std::invalid_argument("window width must be an odd number >= 3, got " + std::to_string(width_days));
    const std::size_t center = date_index(panel, center_date);
    const auto half = static_cast<std::size_t>(width_days / 2);
    if (center < half)
        throw DataError("window around " + center_date + " needs " + std::to_string(half) +
                        " trading days before the centre, only " + std::to_string(center) + " available");
    const std::size_t after = panel.dates.size() - 1 - center;
    if (after < half)
        throw DataError("window around " + center_date + " needs " + std::to_string(half) +
                        " trading days after the centre, only " + std::to_string(after) + " available");

    EventWindow window;
    window.name = name.empty() ? center_date : name;
    window.center_date = center_date;
    window.prices = slice(panel, center - half, static_cast<std::size_t>(width_days));
    window.start_date = window.prices.dates.front();
    window.end_date = window.prices.dates.back();
    return window;
}

EventWindow cut_window_range(const PricePanel& panel, const std::string& start_date, const std::string& end_date,
                             const std::string& name) {
    const std::size_t first = date_index(panel, start_date);
    const std::size_t last = date_index(panel, end_date);
    if (last <= first) throw std::invalid_argument("window end " + end_date + " is not after start " + start_date);
    EventWindow window;
    window.name = name.empty() ? start_date + "/" + end_date : name;
    window.start_date = start_date;
    window.end_date = end_date;
    window.prices = slice(panel, first, last - first + 1);
    return window;
}

TrajectoryReport analyze_dissimilarity(const Matrix& zeta, int dimension, double threshold) {
    if (dimension < 2) throw std::invalid_argument("trajectory analysis needs at least 2 MDS axes");
    if (!(threshold > 0.0)) throw std::invalid_argument("variance-ratio threshold must be > 0");

    TrajectoryReport report;
    const Embedding embedding = classical_mds(zeta, dimension);
    report.coordinates = embedding.coordinates;
    report.step_lengths = step_lengths(report.coordinates);

    const Matrix centred = report.coordinates.rowwise() - report.coordinates.colwise().mean();
    const double n = static_cast<double>(report.coordinates.rows());
    for (Eigen::Index d = 0; d < centred.cols(); ++d) report.axis_variances.push_back(centred.col(d).squaredNorm() / n);
    report.var_x = report.axis_variances[0];
    report.var_y = report.axis_variances[1];
    report.var_z = report.axis_variances.size() > 2 ? report.axis_variances[2] : 0.0;
    for (std::size_t d = 1; d < report.axis_variances.size(); ++d)
        if (report.axis_variances[d] > report.axis_variances[d - 1]) report.axis_order_ok = false;

    if (report.var_x <= 0.0) {
        report.zero_variance = true;
        report.classification = Regime::Normal;
        return report;
    }
    report.var_ratio = report.var_y / report.var_x;
    report.classification = report.var_ratio < threshold ? Regime::Critical : Regime::Normal;
    return report;
}

TrajectoryReport analyze_trajectory(const EventWindow& window, const TrajectoryConfig& config) {
    auto series = epoch_correlations(log_returns(window.prices), config.epochs);
    if (config.epsilon > 0.0) series = power_map(series, config.epsilon);
    TrajectoryReport report = analyze_dissimilarity(similarity_matrix(series.values()), config.dimension, config.threshold);
    report.name = window.name;
    report.start_date = window.start_date;
    report.end_date = window.end_date;
    report.center_date = window.center_date;
    if (!report.axis_order_ok) spdlog::warn("trajectory {}: axis variances are not in descending order", window.name);
    return report;
}

std::vector<CatalogEvent> load_catalog(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw DataError("event catalog '" + path + "' is empty");
    auto header = split(trim(line), ',');
    for (auto& h : header) h = trim(h);
    auto column = [&](const std::string& name) -> int {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    };
    const int c_name = column("name");
    const int c_center = column("center_date");
    const int c_start = column("start_date");
    const int c_end = column("end_date");
    if (c_name < 0 || (c_center < 0 && (c_start < 0 || c_end < 0)))
        throw DataError("event catalog header needs 'name' and 'center_date' (or 'start_date,end_date')");

    std::vector<CatalogEvent> events;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split(trim(line), ',');
        if (fields.size() != header.size()) throw DataError("event catalog row " + std::to_string(row) + " has wrong field count");
        auto get = [&](int c) { return c < 0 ? std::string{} : trim(fields[static_cast<std::size_t>(c)]); };
        events.push_back({get(c_name), get(c_center), get(c_start), get(c_end)});
    }
    return events;
}

CatalogResult classify_catalog(const PricePanel& panel, const std::vector<CatalogEvent>& catalog,
                               const TrajectoryConfig& config, int width_days) {
    std::vector<std::optional<TrajectoryReport>> reports(catalog.size());
    std::vector<std::string> errors(catalog.size());
    parallel_for(catalog.size(), [&](std::size_t r) {
        const auto& event = catalog[r];
        try {
            const EventWindow window = (!event.start_date.empty() && !event.end_date.empty())
                                           ? cut_window_range(panel, event.start_date, event.end_date, event.name)
                                           : cut_window(panel, event.center_date, width_days, event.name);
            reports[r] = analyze_trajectory(window, config);
        } catch (const std::exception& e) {
            errors[r] = e.what();
        }
    });

    CatalogResult result;
    for (std::size_t r = 0; r < catalog.size(); ++r) {
        if (reports[r]) {
            result.reports.push_back(std::move(*reports[r]));
        } else {
            spdlog::warn("event '{}' skipped: {}", catalog[r].name, errors[r]);
            result.errors.push_back({catalog[r].name, errors[r]});
        }
    }
    return result;
}

}  // namespace mstates
