#include "mstates/states.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

namespace mstates {

namespace {

double squared_distance(const Matrix& points, Eigen::Index i, const Matrix& centroids, Eigen::Index c) {
    return (points.row(i) - centroids.row(c)).squaredNorm();
}

double objective_of(const Matrix& points, const std::vector<int>& labels, const Matrix& centroids) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        sum += squared_distance(points, i, centroids, labels[static_cast<std::size_t>(i)]);
    return sum;
}

// Returns true if any label changed. A point only moves when another centroid
// is strictly closer, so ties never cause oscillation.
bool assign(const Matrix& points, const Matrix& centroids, std::vector<int>& labels) {
    bool changed = false;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        int& label = labels[static_cast<std::size_t>(i)];
        int best = label;
        double best_dist = label >= 0 ? squared_distance(points, i, centroids, label)
                                      : std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
            const double d = squared_distance(points, i, centroids, c);
            if (d < best_dist) {
                best_dist = d;
                best = static_cast<int>(c);
            }
        }
        if (best != label) {
            label = best;
            changed = true;
        }
    }
    return changed;
}

void recompute_centroid(const Matrix& points, const std::vector<int>& labels, int cluster, Matrix& centroids) {
    centroids.row(cluster).setZero();
    long count = 0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        if (labels[static_cast<std::size_t>(i)] != cluster) continue;
        centroids.row(cluster) += points.row(i);
        ++count;
    }
    if (count > 0) centroids.row(cluster) /= static_cast<double>(count);
}

void update(const Matrix& points, std::vector<int>& labels, Matrix& centroids) {
    const int k = static_cast<int>(centroids.rows());
    std::vector<long> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    for (int c = 0; c < k; ++c) recompute_centroid(points, labels, c, centroids);

    for (int c = 0; c < k; ++c) {
        if (sizes[static_cast<std::size_t>(c)] > 0) continue;
        Eigen::Index far = -1;
        double far_dist = -1.0;
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            const int l = labels[static_cast<std::size_t>(i)];
            if (sizes[static_cast<std::size_t>(l)] < 2) continue;
            const double d = squared_distance(points, i, centroids, l);
            if (d > far_dist) {
                far_dist = d;
                far = i;
            }
        }
        if (far < 0) break;
        const int donor = labels[static_cast<std::size_t>(far)];
        labels[static_cast<std::size_t>(far)] = c;
        --sizes[static_cast<std::size_t>(donor)];
        sizes[static_cast<std::size_t>(c)] = 1;
        centroids.row(c) = points.row(far);
        recompute_centroid(points, labels, donor, centroids);
    }
}

double population_sd(const std::vector<double>& values, double& mean_out) {
    const double n = static_cast<double>(values.size());
    mean_out = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double sum = 0.0;
    for (double v : values) sum += (v - mean_out) * (v - mean_out);
    return std::sqrt(sum / n);
}

double matrix_mean(const Matrix& m) { return m.size() > 0 ? m.mean() : 0.0; }

}  // namespace

ClusteringRun kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iterations) {
    const auto n = static_cast<int>(points.rows());
    if (k < 1) throw std::invalid_argument("kmeans needs k >= 1");
    if (points.cols() < 1) throw std::invalid_argument("kmeans needs at least one coordinate");
    if (k > n) throw std::invalid_argument("kmeans k=" + std::to_string(k) + " exceeds point count " + std::to_string(n));

    ClusteringRun run;
    run.k = k;
    run.seed = seed;

    std::mt19937_64 rng(seed);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
    }
    run.centroids.resize(k, points.cols());
    for (int c = 0; c < k; ++c) run.centroids.row(c) = points.row(order[static_cast<std::size_t>(c)]);

    run.labels.assign(static_cast<std::size_t>(n), -1);
    for (int it = 0; it < max_iterations; ++it) {
        const bool changed = assign(points, run.centroids, run.labels);
        run.objective_trace.push_back(objective_of(points, run.labels, run.centroids));
        run.iterations = it + 1;
        if (!changed && it > 0) {
            run.converged = true;
            break;
        }
        update(points, run.labels, run.centroids);
    }

    run.objective = objective_of(points, run.labels, run.centroids);
    double total = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        total += std::sqrt(squared_distance(points, i, run.centroids, run.labels[static_cast<std::size_t>(i)]));
    run.d_intra = total / n;
    return run;
}

std::vector<ClusteringRun> kmeans_ensemble(const Matrix& points, int k, int n_inits, std::uint64_t base_seed) {
    if (n_inits < 1) throw std::invalid_argument("kmeans_ensemble needs n_inits >= 1");
    std::vector<ClusteringRun> runs(static_cast<std::size_t>(n_inits));
    parallel_for(runs.size(), [&](std::size_t i) { runs[i] = kmeans(points, k, base_seed ^ static_cast<std::uint64_t>(i)); });
    return runs;
}

const ClusteringRun& best_run(const std::vector<ClusteringRun>& runs) {
    if (runs.empty()) throw std::invalid_argument("best_run of an empty ensemble");
    return *std::min_element(runs.begin(), runs.end(),
                             [](const ClusteringRun& a, const ClusteringRun& b) { return a.objective < b.objective; });
}

OptimizationSurface optimize_over_series(const std::vector<Matrix>& raw, const StateSearch& search) {
    if (search.n_inits < 2) throw std::invalid_argument("optimize_states needs n_inits >= 2");
    if (search.k_values.empty() || search.epsilons.empty())
        throw std::invalid_argument("optimize_states needs a non-empty k range and epsilon grid");

    OptimizationSurface surface;
    for (double epsilon : search.epsilons) {
        std::vector<Matrix> mapped(raw.size());
        parallel_for(raw.size(), [&](std::size_t f) { mapped[f] = power_map(raw[f], epsilon); });
        const Embedding embedding = classical_mds(similarity_matrix(mapped), search.mds_dim);
        for (int k : search.k_values) {
            const auto runs = kmeans_ensemble(embedding.coordinates, k, search.n_inits, search.seed);
            std::vector<double> d(runs.size());
            std::transform(runs.begin(), runs.end(), d.begin(), [](const ClusteringRun& r) { return r.d_intra; });
            SurfaceEntry entry;
            entry.k = k;
            entry.epsilon = epsilon;
            entry.n_inits = search.n_inits;
            entry.sigma_d_intra = population_sd(d, entry.mean_d_intra);
            surface.entries.push_back(entry);
        }
    }
    return surface;
}

OptimizationSurface optimize_states(const ReturnPanel& panel, const EpochSpec& spec, const StateSearch& search) {
    return optimize_over_series(epoch_correlations(panel, spec).values(), search);
}

std::pair<int, double> select_optimum(const OptimizationSurface& surface, int k_min, const TransitionPenalty& penalty) {
    const SurfaceEntry* best = nullptr;
    long best_penalty = 0;
    for (const auto& e : surface.entries) {
        if (e.k < k_min) continue;
        const long p = penalty ? penalty(e.k, e.epsilon) : 0;
        const bool better = !best || p < best_penalty ||
                            (p == best_penalty &&
                             (e.sigma_d_intra < best->sigma_d_intra ||
                              (e.sigma_d_intra == best->sigma_d_intra &&
                               (e.k > best->k || (e.k == best->k && e.epsilon < best->epsilon)))));
        if (better) {
            best = &e;
            best_penalty = p;
        }
    }
    if (!best) throw std::invalid_argument("no surface entry with k >= " + std::to_string(k_min));
    return {best->k, best->epsilon};
}

CountMatrix transition_counts(const std::vector<int>& labels, int k) {
    CountMatrix counts = CountMatrix::Zero(k, k);
    for (int l : labels)
        if (l < 0 || l >= k) throw std::invalid_argument("label " + std::to_string(l) + " outside [0, k)");
    for (std::size_t t = 0; t + 1 < labels.size(); ++t) ++counts(labels[t], labels[t + 1]);
    return counts;
}

StateModel build_state_model(const std::vector<Matrix>& raw, const ClusteringRun& run) {
    if (raw.size() != run.labels.size())
        throw std::invalid_argument("build_state_model: " + std::to_string(run.labels.size()) + " labels for " +
                                    std::to_string(raw.size()) + " matrices");
    if (raw.empty()) throw std::invalid_argument("build_state_model needs at least one epoch");
    const int k = run.k;
    const Eigen::Index n = raw.front().rows();

    std::vector<Matrix> sums(static_cast<std::size_t>(k), Matrix::Zero(n, n));
    std::vector<long> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t t = 0; t < raw.size(); ++t) {
        const auto c = static_cast<std::size_t>(run.labels[t]);
        sums[c] += raw[t];
        ++counts[c];
    }
    std::vector<double> means(static_cast<std::size_t>(k), 0.0);
    for (int c = 0; c < k; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        if (counts[ci] == 0) {
            spdlog::warn("build_state_model: cluster {} is empty", c);
            continue;
        }
        sums[ci] /= static_cast<double>(counts[ci]);
        means[ci] = matrix_mean(sums[ci]);
    }

    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return means[static_cast<std::size_t>(a)] < means[static_cast<std::size_t>(b)]; });

    StateModel model;
    model.k = k;
    model.epsilon = run.epsilon;
    model.cluster_to_state.resize(static_cast<std::size_t>(k));
    model.centroids.resize(k, run.centroids.cols());
    for (int s = 0; s < k; ++s) {
        const auto c = static_cast<std::size_t>(order[static_cast<std::size_t>(s)]);
        model.cluster_to_state[c] = s;
        model.state_mean_corr.push_back(means[c]);
        model.occupancy.push_back(counts[c]);
        model.avg_corr.push_back(sums[c]);
        model.centroids.row(s) = run.centroids.row(static_cast<Eigen::Index>(c));
    }
    model.state_of.reserve(run.labels.size());
    for (int l : run.labels) model.state_of.push_back(model.cluster_to_state[static_cast<std::size_t>(l)]);
    model.transitions = transition_counts(model.state_of, k);
    return model;
}

StateFit fit_states(const std::vector<Matrix>& raw, int k, double epsilon, int n_inits, std::uint64_t seed, int mds_dim) {
    std::vector<Matrix> mapped(raw.size());
    parallel_for(raw.size(), [&](std::size_t f) { mapped[f] = power_map(raw[f], epsilon); });
    StateFit fit;
    fit.zeta = similarity_matrix(mapped);
    fit.embedding = classical_mds(fit.zeta, mds_dim);
    fit.run = best_run(kmeans_ensemble(fit.embedding.coordinates, k, n_inits, seed));
    fit.run.epsilon = epsilon;
    fit.model = build_state_model(raw, fit.run);
    return fit;
}

double mean_radius(const Matrix& points) {
    if (points.rows() == 0) return 0.0;
    const Eigen::RowVectorXd centroid = points.colwise().mean();
    return (points.rowwise() - centroid).rowwise().norm().mean();
}

std::vector<int> topdown_cluster(const Matrix& dissimilarity, double radius_threshold, std::uint64_t seed, int mds_dim,
                                 int n_inits) {
    if (!(radius_threshold > 0.0)) throw std::invalid_argument("topdown_cluster threshold must be > 0");
    const auto fr = static_cast<std::size_t>(dissimilarity.rows());
    std::vector<int> labels(fr, -1);
    int next_label = 0;
    bool singleton_split = false;

    std::function<void(const std::vector<Eigen::Index>&)> split = [&](const std::vector<Eigen::Index>& members) {
        const auto m = static_cast<Eigen::Index>(members.size());
        auto make_leaf = [&] {
            for (auto i : members) labels[static_cast<std::size_t>(i)] = next_label;
            ++next_label;
        };
        if (m == 1) {
            make_leaf();
            return;
        }
        Matrix sub(m, m);
        for (Eigen::Index a = 0; a < m; ++a)
            for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = dissimilarity(members[a], members[b]);
        const Matrix coords = classical_mds(sub, std::min<int>(mds_dim, static_cast<int>(m) - 1)).coordinates;
        if (mean_radius(coords) <= radius_threshold) {
            make_leaf();
            return;
        }
        const ClusteringRun run = best_run(kmeans_ensemble(coords, 2, n_inits, seed));
        std::vector<Eigen::Index> first;
        std::vector<Eigen::Index> second;
        const int first_label = run.labels.front();
        for (Eigen::Index a = 0; a < m; ++a)
            (run.labels[static_cast<std::size_t>(a)] == first_label ? first : second).push_back(members[a]);
        if (second.empty()) {
            make_leaf();
            return;
        }
        if (first.size() == 1 || second.size() == 1) singleton_split = true;
        split(first);
        split(second);
    };

    if (fr > 0) {
        std::vector<Eigen::Index> all(fr);
        std::iota(all.begin(), all.end(), Eigen::Index{0});
        split(all);
    }
    if (singleton_split) spdlog::warn("topdown_cluster: threshold {} produced singleton clusters", radius_threshold);
    return labels;
}

}  // namespace mstates
