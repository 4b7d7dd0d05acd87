#pragma once

#include <cstdint>
#include <vector>

#include "mstates/common.hpp"

namespace mstates {

/// Parameters of a Wishart orthogonal ensemble W = (1/T) A A', A being N x T
/// with i.i.d. Gaussian entries of the given mean and variance.
struct WishartSpec {
    int n_series = 200;
    int length = 800;
    double sigma2 = 1.0;
    double mean = 0.0;
    int ensemble_size = 50;
    std::uint64_t seed = 42;

    void validate() const;
    double aspect_ratio() const { return static_cast<double>(length) / n_series; }
};

struct MarchenkoPasturBounds {
    double lambda_min;
    double lambda_max;
};

/// sigma2 (1 -/+ 1/sqrt(Q))^2
MarchenkoPasturBounds mp_bounds(double q, double sigma2);

/// Continuous part of the Marchenko-Pastur density. The point mass 1 - Q at
/// zero for Q < 1 is not part of this value; see mp_zero_mass.
double mp_density(double lambda, double q, double sigma2);
double mp_zero_mass(double q);

/// Integral of the continuous density over [a, b].
double mp_mass(double a, double b, double q, double sigma2);

struct SpectralDensity {
    std::vector<double> bin_edges;  // bins + 1 values
    std::vector<double> density;    // bins values; sum(density * width) == 1
    std::vector<double> eigenvalues;  // pooled, ascending
    double q = 0.0;
    double lambda_min = 0.0;
    double lambda_max = 0.0;

    double mean() const;
    double variance() const;
    /// Fraction of pooled eigenvalues outside [lambda_min, lambda_max].
    double fraction_outside(double tolerance = 0.0) const;
};

/// Realisation i is drawn from std::mt19937_64 seeded with seed ^ i, using
/// std::normal_distribution for the entries.
std::vector<Matrix> sample_woe(const WishartSpec& spec);

/// Pooled eigenvalue histogram over [0, max eigenvalue] (or [lo, hi] when
/// given), normalised to unit area. Throws on non-symmetric input.
SpectralDensity empirical_spectrum(const std::vector<Matrix>& matrices, int bins);
SpectralDensity empirical_spectrum(const std::vector<Matrix>& matrices, int bins, double lo, double hi);

/// Samples the ensemble, applies the element-wise power map to each
/// realisation and returns its spectrum with Q and the analytic bounds set.
SpectralDensity powermapped_spectrum(const WishartSpec& spec, double epsilon, int bins);

/// Sum over bins of |empirical mass - analytic mass| (analytic mass includes
/// the zero-eigenvalue weight for Q < 1).
double l1_distance_to_mp(const SpectralDensity& density, double q, double sigma2);

/// Smallest epsilon in [0, epsilon_max] whose power-mapped spectral variance
/// for `spec` equals `target_variance`, found by bisection.
double match_variance_epsilon(const WishartSpec& spec, double target_variance, double epsilon_max = 2.0,
                              int iterations = 40);

}  // namespace mstates
