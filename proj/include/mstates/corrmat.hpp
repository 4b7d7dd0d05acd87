#pragma once

#include <string>
#include <vector>

#include "mstates/common.hpp"
#include "mstates/ingest.hpp"

namespace mstates {

/// Rolling epochs of `length` return days, advanced by `shift` days.
struct EpochSpec {
    int length = 20;
    int shift = 1;

    void validate() const;
    /// floor((n_returns - length) / shift) + 1; throws if length > n_returns.
    int frame_count(int n_returns) const;
    int first_column(int epoch_index) const { return (epoch_index - 1) * shift; }
};

struct CorrelationMatrix {
    int epoch_index = 0;  // 1-based
    std::string start_date;
    Matrix values;
    double epsilon_applied = 0.0;
};

struct EpochCorrelationSeries {
    EpochSpec spec;
    std::vector<std::string> tickers;
    std::vector<CorrelationMatrix> matrices;

    std::size_t size() const { return matrices.size(); }
    std::vector<Matrix> values() const;
    std::vector<std::string> start_dates() const;
};

/// Pearson correlation of the columns [first, first + length) of `returns`,
/// using 1/T normalisation. A row with zero variance correlates 0 with every
/// other row and 1 with itself.
Matrix pearson_correlation(const Matrix& returns, Eigen::Index first, Eigen::Index length,
                           int* zero_variance_rows = nullptr);

EpochCorrelationSeries epoch_correlations(const ReturnPanel& panel, const EpochSpec& spec);

/// x -> sign(x) |x|^(1 + epsilon), element-wise, diagonal included.
Matrix power_map(const Matrix& values, double epsilon);
CorrelationMatrix power_map(const CorrelationMatrix& matrix, double epsilon);
EpochCorrelationSeries power_map(const EpochCorrelationSeries& series, double epsilon);

/// Series file: one JSON header line (format, N, Fr, T, shift, epsilon,
/// tickers, per-epoch index and start date) followed by Fr dense N x N blocks
/// of little-endian float64 in row-major order.
void write_series(const std::string& path, const EpochCorrelationSeries& series);
EpochCorrelationSeries read_series(const std::string& path);

}  // namespace mstates
