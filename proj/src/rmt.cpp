#include "mstates/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "mstates/corrmat.hpp"

namespace mstates {

void WishartSpec::validate() const {
    if (n_series < 1 || length < 1 || ensemble_size < 1)
        throw std::invalid_argument("Wishart N, T and ensemble size must be >= 1");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("Wishart sigma2 must be > 0");
}

MarchenkoPasturBounds mp_bounds(double q, double sigma2) {
    if (!(q > 0.0) || !(sigma2 > 0.0)) throw std::invalid_argument("mp_bounds needs Q > 0 and sigma2 > 0");
    const double r = 1.0 / std::sqrt(q);
    return {sigma2 * (1.0 - r) * (1.0 - r), sigma2 * (1.0 + r) * (1.0 + r)};
}

double mp_density(double lambda, double q, double sigma2) {
    const auto [lo, hi] = mp_bounds(q, sigma2);
    if (lambda <= lo || lambda >= hi || lambda <= 0.0) return 0.0;
    return q / (2.0 * std::numbers::pi * sigma2) * std::sqrt((hi - lambda) * (lambda - lo)) / lambda;
}

double mp_zero_mass(double q) { return q < 1.0 ? 1.0 - q : 0.0; }

double mp_mass(double a, double b, double q, double sigma2) {
    const auto [lo, hi] = mp_bounds(q, sigma2);
    const double left = std::max(a, lo);
    const double right = std::min(b, hi);
    if (right <= left) return 0.0;
    boost::math::quadrature::tanh_sinh<double> integrator;
    return integrator.integrate([&](double x) { return mp_density(x, q, sigma2); }, left, right);
}

double SpectralDensity::mean() const {
    if (eigenvalues.empty()) return 0.0;
    double sum = 0.0;
    for (double v : eigenvalues) sum += v;
    return sum / static_cast<double>(eigenvalues.size());
}

double SpectralDensity::variance() const {
    if (eigenvalues.empty()) return 0.0;
    const double m = mean();
    double sum = 0.0;
    for (double v : eigenvalues) sum += (v - m) * (v - m);
    return sum / static_cast<double>(eigenvalues.size());
}

double SpectralDensity::fraction_outside(double tolerance) const {
    if (eigenvalues.empty()) return 0.0;
    const auto outside = std::count_if(eigenvalues.begin(), eigenvalues.end(), [&](double v) {
        return v < lambda_min - tolerance || v > lambda_max + tolerance;
    });
    return static_cast<double>(outside) / static_cast<double>(eigenvalues.size());
}

std::vector<Matrix> sample_woe(const WishartSpec& spec) {
    spec.validate();
    std::vector<Matrix> out(static_cast<std::size_t>(spec.ensemble_size));
    parallel_for(out.size(), [&](std::size_t i) {
        std::mt19937_64 rng(spec.seed ^ static_cast<std::uint64_t>(i));
        std::normal_distribution<double> normal(spec.mean, std::sqrt(spec.sigma2));
        Matrix a(spec.n_series, spec.length);
        for (Eigen::Index r = 0; r < a.rows(); ++r)
            for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = normal(rng);
        Matrix w = (a * a.transpose()) / static_cast<double>(spec.length);
        out[i] = 0.5 * (w + w.transpose());
    });
    return out;
}

namespace {

std::vector<double> pooled_eigenvalues(const std::vector<Matrix>& matrices) {
    if (matrices.empty()) throw std::invalid_argument("empirical_spectrum needs at least one matrix");
    const Eigen::Index n = matrices.front().rows();
    for (const auto& m : matrices) {
        if (m.rows() != n || m.cols() != n) throw std::invalid_argument("spectrum matrices must share one square size");
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw std::invalid_argument("spectrum input matrix is not symmetric");
    }
    std::vector<std::vector<double>> per(matrices.size());
    parallel_for(matrices.size(), [&](std::size_t i) {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(matrices[i], Eigen::EigenvaluesOnly);
        const Vector& ev = solver.eigenvalues();
        per[i].assign(ev.data(), ev.data() + ev.size());
    });
    std::vector<double> pooled;
    pooled.reserve(matrices.size() * static_cast<std::size_t>(n));
    for (const auto& p : per) pooled.insert(pooled.end(), p.begin(), p.end());
    std::sort(pooled.begin(), pooled.end());
    return pooled;
}

SpectralDensity histogram(std::vector<double> eigenvalues, int bins, double lo, double hi) {
    if (bins < 1) throw std::invalid_argument("histogram needs at least one bin");
    if (!(hi > lo)) hi = lo + 1.0;
    SpectralDensity out;
    out.eigenvalues = std::move(eigenvalues);
    const double width = (hi - lo) / bins;
    out.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) out.bin_edges[static_cast<std::size_t>(b)] = lo + width * b;
    out.bin_edges.back() = hi;

    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    for (double v : out.eigenvalues) {
        if (v < lo || v > hi) continue;
        const auto b = std::min(static_cast<std::size_t>((v - lo) / width), counts.size() - 1);
        counts[b] += 1.0;
    }
    const double total = static_cast<double>(out.eigenvalues.size());
    out.density.resize(counts.size());
    for (std::size_t b = 0; b < counts.size(); ++b) out.density[b] = counts[b] / (total * width);
    return out;
}

}  // namespace

SpectralDensity empirical_spectrum(const std::vector<Matrix>& matrices, int bins) {
    auto eigenvalues = pooled_eigenvalues(matrices);
    // Round-off can leave zero modes slightly negative; keep them in bin 0.
    const double lo = std::min(0.0, eigenvalues.front());
    const double hi = eigenvalues.back();
    return histogram(std::move(eigenvalues), bins, lo, hi);
}

SpectralDensity empirical_spectrum(const std::vector<Matrix>& matrices, int bins, double lo, double hi) {
    return histogram(pooled_eigenvalues(matrices), bins, lo, hi);
}

SpectralDensity powermapped_spectrum(const WishartSpec& spec, double epsilon, int bins) {
    auto realisations = sample_woe(spec);
    parallel_for(realisations.size(), [&](std::size_t i) { realisations[i] = power_map(realisations[i], epsilon); });
    auto density = empirical_spectrum(realisations, bins);
    density.q = spec.aspect_ratio();
    const auto bounds = mp_bounds(density.q, spec.sigma2);
    density.lambda_min = bounds.lambda_min;
    density.lambda_max = bounds.lambda_max;
    return density;
}

double l1_distance_to_mp(const SpectralDensity& density, double q, double sigma2) {
    double distance = 0.0;
    double analytic_seen = 0.0;
    for (std::size_t b = 0; b < density.density.size(); ++b) {
        const double a = density.bin_edges[b];
        const double c = density.bin_edges[b + 1];
        double analytic = mp_mass(a, c, q, sigma2);
        if (a <= 0.0 && 0.0 <= c) analytic += mp_zero_mass(q);
        analytic_seen += analytic;
        distance += std::abs(density.density[b] * (c - a) - analytic);
    }
    // Analytic mass that falls outside the histogram range counts as a miss.
    const double analytic_total = (q < 1.0 ? q : 1.0) + mp_zero_mass(q);
    distance += std::max(0.0, analytic_total - analytic_seen);
    return distance;
}

double match_variance_epsilon(const WishartSpec& spec, double target_variance, double epsilon_max, int iterations) {
    const auto realisations = sample_woe(spec);
    auto variance_at = [&](double epsilon) {
        std::vector<Matrix> mapped(realisations.size());
        parallel_for(mapped.size(), [&](std::size_t i) { mapped[i] = power_map(realisations[i], epsilon); });
        return empirical_spectrum(mapped, 1).variance();
    };

    if (variance_at(0.0) <= target_variance) return 0.0;
    if (variance_at(epsilon_max) > target_variance)
        throw NumericError("no epsilon in [0, " + format_double(epsilon_max) + "] reaches the target variance");

    double lo = 0.0;
    double hi = epsilon_max;
    for (int i = 0; i < iterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        (variance_at(mid) > target_variance ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace mstates
