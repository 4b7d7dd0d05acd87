#include "mstates/sector.hpp"

#include <cstdlib>

#include <spdlog/spdlog.h>

namespace mstates {

std::string to_string(SectorDiagonal convention) {
    return convention == SectorDiagonal::ExcludeSelfPairs ? "exclude_self_pairs" : "include_self_pairs";
}

SectorLayout sector_layout(const std::vector<std::string>& tickers, const SectorMap& sector_of) {
    std::map<std::string, std::vector<Eigen::Index>> grouped;
    for (std::size_t i = 0; i < tickers.size(); ++i) {
        const auto it = sector_of.find(tickers[i]);
        if (it == sector_of.end()) throw DataError("ticker '" + tickers[i] + "' has no sector");
        grouped[it->second].push_back(static_cast<Eigen::Index>(i));
    }
    SectorLayout layout;
    for (auto& [sector, members] : grouped) {
        layout.sectors.push_back(sector);
        layout.members.push_back(std::move(members));
    }
    return layout;
}

Matrix sector_average(const Matrix& correlation, const SectorLayout& layout, SectorDiagonal convention) {
    const auto ns = static_cast<Eigen::Index>(layout.sectors.size());
    Matrix m(ns, ns);
    for (Eigen::Index a = 0; a < ns; ++a) {
        const auto& ia = layout.members[static_cast<std::size_t>(a)];
        for (Eigen::Index b = a; b < ns; ++b) {
            const auto& ib = layout.members[static_cast<std::size_t>(b)];
            double sum = 0.0;
            long count = 0;
            for (auto i : ia)
                for (auto j : ib) {
                    if (a == b && i == j && convention == SectorDiagonal::ExcludeSelfPairs) continue;
                    sum += correlation(i, j);
                    ++count;
                }
            const double value = count > 0 ? sum / static_cast<double>(count) : 1.0;
            m(a, b) = value;
            m(b, a) = value;
        }
    }
    return m;
}

std::vector<SectorMatrix> sector_series(const EpochCorrelationSeries& series, const SectorMap& sector_of,
                                        SectorDiagonal convention) {
    const SectorLayout layout = sector_layout(series.tickers, sector_of);
    if (convention == SectorDiagonal::ExcludeSelfPairs)
        for (std::size_t s = 0; s < layout.sectors.size(); ++s)
            if (layout.members[s].size() == 1)
                spdlog::warn("sector '{}' has a single stock; its diagonal entry is set to 1", layout.sectors[s]);

    std::vector<SectorMatrix> out(series.size());
    parallel_for(out.size(), [&](std::size_t f) {
        out[f].epoch_index = series.matrices[f].epoch_index;
        out[f].sectors = layout.sectors;
        out[f].values = sector_average(series.matrices[f].values, layout, convention);
    });
    return out;
}

std::vector<Matrix> sector_return_correlations(const ReturnPanel& panel, const EpochSpec& spec) {
    const SectorLayout layout = sector_layout(panel.tickers, panel.sector_of);
    Matrix averaged(static_cast<Eigen::Index>(layout.sectors.size()), panel.returns.cols());
    for (std::size_t s = 0; s < layout.members.size(); ++s) {
        averaged.row(static_cast<Eigen::Index>(s)).setZero();
        for (auto i : layout.members[s]) averaged.row(static_cast<Eigen::Index>(s)) += panel.returns.row(i);
        averaged.row(static_cast<Eigen::Index>(s)) /= static_cast<double>(layout.members[s].size());
    }
    const int frames = spec.frame_count(static_cast<int>(panel.returns.cols()));
    std::vector<Matrix> out(static_cast<std::size_t>(frames));
    parallel_for(out.size(), [&](std::size_t f) {
        out[f] = pearson_correlation(averaged, spec.first_column(static_cast<int>(f) + 1), spec.length);
    });
    return out;
}

SectorFit sector_state_pipeline(const ReturnPanel& panel, const EpochSpec& spec, int k, double epsilon, int n_inits,
                                std::uint64_t seed, int mds_dim, SectorDiagonal convention) {
    if (panel.sector_of.empty()) throw DataError("sector analysis needs a sector map");
    const auto series = sector_series(epoch_correlations(panel, spec), panel.sector_of, convention);
    std::vector<Matrix> raw;
    raw.reserve(series.size());
    for (const auto& s : series) raw.push_back(s.values);

    SectorFit out;
    out.sectors = series.empty() ? std::vector<std::string>{} : series.front().sectors;
    out.fit = fit_states(raw, k, epsilon, n_inits, seed, mds_dim);
    return out;
}

DisplacementReport displacement(const std::vector<int>& stock_states, const std::vector<int>& sector_states) {
    if (stock_states.size() != sector_states.size())
        throw std::invalid_argument("displacement: sequences have lengths " + std::to_string(stock_states.size()) +
                                    " and " + std::to_string(sector_states.size()));
    DisplacementReport report;
    for (std::size_t t = 0; t < stock_states.size(); ++t) {
        const int d = sector_states[t] - stock_states[t];
        ++report.histogram[d];
        report.max_abs_displacement = std::max(report.max_abs_displacement, std::abs(d));
    }
    return report;
}

}  // namespace mstates
