#pragma once

#include <map>
#include <string>
#include <vector>

#include "mstates/common.hpp"
#include "mstates/corrmat.hpp"
#include "mstates/ingest.hpp"
#include "mstates/states.hpp"

namespace mstates {

enum class SectorDiagonal {
    ExcludeSelfPairs,  // M_aa averages C_ij over i != j within sector a
    IncludeSelfPairs,  // M_aa averages over all i, j in sector a
};

std::string to_string(SectorDiagonal convention);

struct SectorMatrix {
    int epoch_index = 0;
    std::vector<std::string> sectors;
    Matrix values;  // N_S x N_S
};

/// Sectors in ascending label order; member indices per sector.
struct SectorLayout {
    std::vector<std::string> sectors;
    std::vector<std::vector<Eigen::Index>> members;
};

/// Throws DataError if a ticker has no sector.
SectorLayout sector_layout(const std::vector<std::string>& tickers, const SectorMap& sector_of);

/// Intra- and inter-sector block means. A singleton sector under
/// ExcludeSelfPairs has no off-diagonal pair and gets M_aa = 1.
Matrix sector_average(const Matrix& correlation, const SectorLayout& layout,
                      SectorDiagonal convention = SectorDiagonal::ExcludeSelfPairs);

std::vector<SectorMatrix> sector_series(const EpochCorrelationSeries& series, const SectorMap& sector_of,
                                        SectorDiagonal convention = SectorDiagonal::ExcludeSelfPairs);

/// The rejected alternative: average log-returns per sector first, then
/// correlate the N_S sector series over each epoch. Diagnostics only.
std::vector<Matrix> sector_return_correlations(const ReturnPanel& panel, const EpochSpec& spec);

struct SectorFit {
    std::vector<std::string> sectors;
    StateFit fit;
};

/// Power map on M, zeta over the mapped M series, MDS, k-means and a state
/// model built from the raw M series. Reuses fit_states unchanged.
SectorFit sector_state_pipeline(const ReturnPanel& panel, const EpochSpec& spec, int k, double epsilon, int n_inits,
                                std::uint64_t seed, int mds_dim = 3,
                                SectorDiagonal convention = SectorDiagonal::ExcludeSelfPairs);

struct DisplacementReport {
    std::map<int, long> histogram;  // d = sector state - stock state
    int max_abs_displacement = 0;
};

DisplacementReport displacement(const std::vector<int>& stock_states, const std::vector<int>& sector_states);

}  // namespace mstates
