#include "mstates/corrmat.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "json.hpp"
#include <spdlog/spdlog.h>

namespace mstates {

void EpochSpec::validate() const {
    if (length < 2) throw std::invalid_argument("epoch length T must be >= 2, got " + std::to_string(length));
    if (shift < 1) throw std::invalid_argument("epoch shift must be >= 1, got " + std::to_string(shift));
}

int EpochSpec::frame_count(int n_returns) const {
    validate();
    if (length > n_returns)
        throw DataError("epoch length T=" + std::to_string(length) + " requires " + std::to_string(length) +
                        " return days but only " + std::to_string(n_returns) + " are available");
    return (n_returns - length) / shift + 1;
}

std::vector<Matrix> EpochCorrelationSeries::values() const {
    std::vector<Matrix> out;
    out.reserve(matrices.size());
    for (const auto& m : matrices) out.push_back(m.values);
    return out;
}

std::vector<std::string> EpochCorrelationSeries::start_dates() const {
    std::vector<std::string> out;
    out.reserve(matrices.size());
    for (const auto& m : matrices) out.push_back(m.start_date);
    return out;
}

Matrix pearson_correlation(const Matrix& returns, Eigen::Index first, Eigen::Index length, int* zero_variance_rows) {
    const Eigen::Index n = returns.rows();
    Matrix window = returns.middleCols(first, length);
    const Vector mean = window.rowwise().mean();
    window.colwise() -= mean;

    Vector inv_sd(n);
    int degenerate = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double var = window.row(i).squaredNorm() / static_cast<double>(length);
        if (var > 0.0) {
            inv_sd(i) = 1.0 / std::sqrt(var);
        } else {
            inv_sd(i) = 0.0;
            ++degenerate;
        }
    }
    if (zero_variance_rows) *zero_variance_rows = degenerate;

    Matrix z = inv_sd.asDiagonal() * window;
    Matrix c(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        c(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = std::clamp(z.row(i).dot(z.row(j)) / static_cast<double>(length), -1.0, 1.0);
            c(i, j) = v;
            c(j, i) = v;
        }
    }
    return c;
}

EpochCorrelationSeries epoch_correlations(const ReturnPanel& panel, const EpochSpec& spec) {
    const int n_returns = static_cast<int>(panel.returns.cols());
    const int frames = spec.frame_count(n_returns);

    EpochCorrelationSeries series;
    series.spec = spec;
    series.tickers = panel.tickers;
    series.matrices.resize(static_cast<std::size_t>(frames));
    std::vector<int> degenerate(static_cast<std::size_t>(frames), 0);

    parallel_for(static_cast<std::size_t>(frames), [&](std::size_t f) {
        const int tau = static_cast<int>(f) + 1;
        auto& m = series.matrices[f];
        m.epoch_index = tau;
        m.start_date = panel.dates[static_cast<std::size_t>(spec.first_column(tau))];
        m.values = pearson_correlation(panel.returns, spec.first_column(tau), spec.length, &degenerate[f]);
    });

    for (std::size_t f = 0; f < degenerate.size(); ++f)
        if (degenerate[f] > 0)
            spdlog::warn("epoch {} ({}): {} zero-variance series, correlations set to 0", f + 1,
                         series.matrices[f].start_date, degenerate[f]);
    return series;
}

Matrix power_map(const Matrix& values, double epsilon) {
    if (!(epsilon >= 0.0)) throw std::invalid_argument("power map epsilon must be >= 0, got " + format_double(epsilon));
    if (epsilon == 0.0) return values;
    const double exponent = 1.0 + epsilon;
    return values.unaryExpr([exponent](double x) { return std::copysign(std::pow(std::abs(x), exponent), x); });
}

CorrelationMatrix power_map(const CorrelationMatrix& matrix, double epsilon) {
    CorrelationMatrix out = matrix;
    out.values = power_map(matrix.values, epsilon);
    out.epsilon_applied = epsilon;
    return out;
}

EpochCorrelationSeries power_map(const EpochCorrelationSeries& series, double epsilon) {
    EpochCorrelationSeries out = series;
    parallel_for(out.matrices.size(), [&](std::size_t f) { out.matrices[f] = power_map(series.matrices[f], epsilon); });
    return out;
}

static_assert(std::endian::native == std::endian::little, "series files are written little-endian");

void write_series(const std::string& path, const EpochCorrelationSeries& series) {
    const std::size_t n = series.tickers.size();
    nlohmann::ordered_json header;
    header["format"] = "mstates-series-v1";
    header["N"] = n;
    header["Fr"] = series.size();
    header["T"] = series.spec.length;
    header["shift"] = series.spec.shift;
    header["epsilon"] = series.matrices.empty() ? 0.0 : series.matrices.front().epsilon_applied;
    header["tickers"] = series.tickers;
    auto& epochs = header["epochs"] = nlohmann::ordered_json::array();
    for (const auto& m : series.matrices) epochs.push_back({m.epoch_index, m.start_date});

    std::string bytes = header.dump() + "\n";
    const std::size_t block = n * n * sizeof(double);
    bytes.reserve(bytes.size() + block * series.size());
    std::vector<double> row_major(n * n);
    for (const auto& m : series.matrices) {
        if (static_cast<std::size_t>(m.values.rows()) != n || static_cast<std::size_t>(m.values.cols()) != n)
            throw std::invalid_argument("series matrix size does not match ticker count");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                row_major[i * n + j] = m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        bytes.append(reinterpret_cast<const char*>(row_major.data()), block);
    }
    write_file(path, bytes);
}

EpochCorrelationSeries read_series(const std::string& path) {
    const std::string bytes = read_file(path);
    const auto newline = bytes.find('\n');
    if (newline == std::string::npos) throw DataError("series file '" + path + "' has no header line");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(0, newline));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad series header in '" + path + "': " + e.what());
    }
    if (header.value("format", "") != "mstates-series-v1") throw DataError("'" + path + "' is not a series file");

    EpochCorrelationSeries series;
    series.spec.length = header.at("T").get<int>();
    series.spec.shift = header.at("shift").get<int>();
    series.tickers = header.at("tickers").get<std::vector<std::string>>();
    const double epsilon = header.at("epsilon").get<double>();
    const std::size_t n = header.at("N").get<std::size_t>();
    const std::size_t frames = header.at("Fr").get<std::size_t>();
    const std::size_t block = n * n * sizeof(double);
    if (series.tickers.size() != n || header.at("epochs").size() != frames)
        throw DataError("inconsistent series header in '" + path + "'");
    if (bytes.size() - newline - 1 != block * frames)
        throw DataError("series file '" + path + "' is truncated or has trailing bytes");

    std::vector<double> row_major(n * n);
    const char* cursor = bytes.data() + newline + 1;
    for (std::size_t f = 0; f < frames; ++f) {
        CorrelationMatrix m;
        m.epoch_index = header["epochs"][f][0].get<int>();
        m.start_date = header["epochs"][f][1].get<std::string>();
        m.epsilon_applied = epsilon;
        std::memcpy(row_major.data(), cursor, block);
        cursor += block;
        m.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row_major[i * n + j];
        series.matrices.push_back(std::move(m));
    }
    return series;
}

}  // namespace mstates
