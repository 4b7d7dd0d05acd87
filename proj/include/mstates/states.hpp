#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mstates/common.hpp"
#include "mstates/corrmat.hpp"
#include "mstates/geometry.hpp"

namespace mstates {

/// One Lloyd k-means run. Labels are 0-based cluster ids.
struct ClusteringRun {
    int k = 0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    std::vector<int> labels;
    Matrix centroids;              // k x D
    double d_intra = 0.0;          // mean Euclidean point-to-centroid distance
    double objective = 0.0;        // sum of squared point-to-centroid distances
    std::vector<double> objective_trace;  // objective after every assignment step
    int iterations = 0;
    bool converged = false;
};

/// Lloyd iteration from k distinct data points chosen uniformly with
/// std::mt19937_64(seed). Stops at an assignment fixed point or after
/// max_iterations. An empty cluster is re-seeded with the point farthest
/// from its own centroid.
ClusteringRun kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iterations = 300);

/// n_inits runs with seeds base_seed ^ i, i = 0..n_inits-1.
std::vector<ClusteringRun> kmeans_ensemble(const Matrix& points, int k, int n_inits, std::uint64_t base_seed);

/// Run with the lowest objective (first on ties).
const ClusteringRun& best_run(const std::vector<ClusteringRun>& runs);

struct SurfaceEntry {
    int k = 0;
    double epsilon = 0.0;
    double sigma_d_intra = 0.0;  // population standard deviation over inits
    double mean_d_intra = 0.0;
    int n_inits = 0;
};

struct OptimizationSurface {
    std::vector<SurfaceEntry> entries;
};

struct StateSearch {
    std::vector<int> k_values;
    std::vector<double> epsilons;
    int n_inits = 1000;
    std::uint64_t seed = 7;
    int mds_dim = 3;
};

/// For every epsilon: power map each raw matrix, build zeta, embed with
/// classical MDS, then for every k run the k-means ensemble. Works on any
/// matrix series (stock-level correlations or sector matrices).
OptimizationSurface optimize_over_series(const std::vector<Matrix>& raw, const StateSearch& search);

OptimizationSurface optimize_states(const ReturnPanel& panel, const EpochSpec& spec, const StateSearch& search);

/// Ranks candidates by a caller-supplied count of transitions from the two
/// lowest states into the top state (lower is better), ahead of sigma.
using TransitionPenalty = std::function<long(int k, double epsilon)>;

/// Among entries with k >= k_min: minimum sigma_d_intra, ties to larger k,
/// then smaller epsilon.
std::pair<int, double> select_optimum(const OptimizationSurface& surface, int k_min,
                                      const TransitionPenalty& penalty = {});

using CountMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

/// counts(a, b) = #{t : labels[t] = a and labels[t+1] = b}.
CountMatrix transition_counts(const std::vector<int>& labels, int k);

/// Market states S1..Sk ordered by ascending mean of the state's average
/// matrix (mean over all entries). state_of is 0-based (0 = S1).
struct StateModel {
    int k = 0;
    double epsilon = 0.0;
    std::vector<int> state_of;
    std::vector<int> cluster_to_state;
    std::vector<double> state_mean_corr;
    std::vector<long> occupancy;
    std::vector<Matrix> avg_corr;
    CountMatrix transitions;
    Matrix centroids;  // rows reordered by state
};

StateModel build_state_model(const std::vector<Matrix>& raw, const ClusteringRun& run);

/// Stock-level fit at a fixed (k, epsilon): best-of-n_inits k-means on the
/// MDS map of the power-mapped series; states from raw matrices.
struct StateFit {
    StateModel model;
    ClusteringRun run;
    Embedding embedding;
    Matrix zeta;
};

StateFit fit_states(const std::vector<Matrix>& raw, int k, double epsilon, int n_inits, std::uint64_t seed,
                    int mds_dim = 3);

/// Recursive k = 2 bisection on the MDS map of each sub-cluster until every
/// cluster's mean distance to its centroid is <= radius_threshold. Leaf
/// clusters are numbered 0.. in depth-first discovery order.
std::vector<int> topdown_cluster(const Matrix& dissimilarity, double radius_threshold, std::uint64_t seed = 7,
                                 int mds_dim = 3, int n_inits = 10);

/// Mean Euclidean distance of the points to their centroid.
double mean_radius(const Matrix& points);

}  // namespace mstates
