// Command-line front end: one subcommand per pipeline stage plus `run` and
// `demo`. Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>

#include "CLI11.hpp"
#include <spdlog/spdlog.h>

#include "mstates/artifacts.hpp"
#include "mstates/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mstates;

namespace {

std::string sidecar_for(const std::string& path) { return path + ".json"; }

PricePanel panel_with_sectors(const std::string& panel_path, const std::string& sectors_path) {
    PricePanel panel = read_panel(panel_path);
    if (!sectors_path.empty()) panel.sector_of = load_sectors(sectors_path);
    return panel;
}

void print_surface_optimum(const OptimizationSurface& surface, int k_min) {
    try {
        const auto [k, eps] = select_optimum(surface, k_min);
        std::cout << "optimum (k >= " << k_min << "): k=" << k << " epsilon=" << format_double(eps) << "\n";
    } catch (const std::invalid_argument&) {
        std::cout << "no surface entry with k >= " << k_min << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Market-state detection from rolling correlation matrices"};
    app.require_subcommand(1);

    unsigned workers = 1;
    bool quiet = false;
    app.add_option("--workers", workers, "Worker threads (never changes results)")->check(CLI::PositiveNumber);
    app.add_flag("--quiet", quiet, "Only log errors");

    std::function<void()> action;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Load prices, filter gaps, write a panel file");
    std::string prices_path, sectors_path, out_path;
    int max_gap = 2;
    ingest->add_option("--prices", prices_path, "Price CSV (date,TICKER...)")->required();
    ingest->add_option("--sectors", sectors_path, "Sector CSV (ticker,sector)");
    ingest->add_option("--max-gap", max_gap, "Longest allowed run of missing entries");
    ingest->add_option("--out", out_path, "Panel file")->required();
    ingest->callback([&] {
        action = [&] {
            PricePanel panel = load_prices(prices_path, ContinuityPolicy{max_gap});
            if (!sectors_path.empty()) panel.sector_of = load_sectors(sectors_path);
            write_panel(out_path, panel);
            std::cout << "N=" << panel.size() << " T_tot=" << panel.dates.size() << " dropped=" << panel.dropped.size()
                      << "\n";
        };
    });

    // corr
    auto* corr = app.add_subcommand("corr", "Rolling-epoch correlation matrices");
    std::string panel_path;
    EpochSpec epochs;
    double epsilon = 0.0;
    corr->add_option("--panel", panel_path, "Panel file")->required();
    corr->add_option("--T", epochs.length, "Epoch length in days");
    corr->add_option("--shift", epochs.shift, "Epoch shift in days");
    corr->add_option("--epsilon", epsilon, "Power-map exponent offset");
    corr->add_option("--out", out_path, "Series file")->required();
    corr->callback([&] {
        action = [&] {
            auto series = epoch_correlations(log_returns(read_panel(panel_path)), epochs);
            if (epsilon > 0.0) series = power_map(series, epsilon);
            else if (epsilon < 0.0) throw std::invalid_argument("--epsilon must be >= 0");
            write_series(out_path, series);
            std::cout << "Fr=" << series.size() << " N=" << series.tickers.size() << "\n";
        };
    });

    // rmt-validate
    auto* rmt = app.add_subcommand("rmt-validate", "Wishart ensemble spectrum vs the Marchenko-Pastur law");
    WishartSpec wishart;
    int bins = 100;
    rmt->add_option("--N", wishart.n_series, "Series count");
    rmt->add_option("--T", wishart.length, "Series length");
    rmt->add_option("--ensemble", wishart.ensemble_size, "Realisations");
    rmt->add_option("--sigma2", wishart.sigma2, "Entry variance");
    rmt->add_option("--mean", wishart.mean, "Entry mean");
    rmt->add_option("--epsilon", epsilon, "Power-map exponent offset");
    rmt->add_option("--bins", bins, "Histogram bins");
    rmt->add_option("--seed", wishart.seed, "RNG seed");
    rmt->add_option("--out", out_path, "Density CSV")->required();
    rmt->callback([&] {
        action = [&] {
            const SpectralDensity density = powermapped_spectrum(wishart, epsilon, bins);
            write_density_csv(out_path, density);
            const double l1 = l1_distance_to_mp(density, density.q, wishart.sigma2);
            write_json(sidecar_for(out_path), Json{{"Q", density.q},
                                                  {"lambda_min", density.lambda_min},
                                                  {"lambda_max", density.lambda_max},
                                                  {"epsilon", epsilon},
                                                  {"l1_distance", l1},
                                                  {"fraction_outside", density.fraction_outside()},
                                                  {"variance", density.variance()}});
            std::cout << "Q=" << density.q << " L1=" << l1 << " outside=" << density.fraction_outside() << "\n";
        };
    });

    // mds
    auto* mds = app.add_subcommand("mds", "Similarity matrix and classical MDS of a series file");
    std::string series_path;
    int dim = 3;
    mds->add_option("--series", series_path, "Series file")->required();
    mds->add_option("--dim", dim, "Embedding dimension");
    mds->add_option("--epsilon", epsilon, "Power map applied before zeta");
    mds->add_option("--out", out_path, "Coordinates CSV")->required();
    mds->callback([&] {
        action = [&] {
            const auto series = power_map(read_series(series_path), epsilon);
            const Embedding embedding = classical_mds(similarity_matrix(series.values()), dim);
            write_coords_csv(out_path, embedding.coordinates, series.start_dates());
            write_json(sidecar_for(out_path), embedding_diagnostics(embedding));
        };
    });

    // states optimize | fit | topdown
    auto* states = app.add_subcommand("states", "Market-state identification");
    states->require_subcommand(1);
    std::string k_text = "2..10", eps_text = "0:0.1:1", plot_dir;
    int n_inits = 1000, k = 5, k_min = 4;
    std::uint64_t seed = 7;
    auto add_panel_epochs = [&](CLI::App* cmd) {
        cmd->add_option("--panel", panel_path, "Panel file")->required();
        cmd->add_option("--T", epochs.length, "Epoch length in days");
        cmd->add_option("--shift", epochs.shift, "Epoch shift in days");
        cmd->add_option("--inits", n_inits, "k-means initialisations");
        cmd->add_option("--seed", seed, "Base seed");
        cmd->add_option("--dim", dim, "MDS dimension for clustering");
    };

    auto* optimize = states->add_subcommand("optimize", "sigma(d_intra) over a (k, epsilon) grid");
    add_panel_epochs(optimize);
    optimize->add_option("--k", k_text, "k range a..b or list");
    optimize->add_option("--epsilon", eps_text, "epsilon grid a:step:b or list");
    optimize->add_option("--k-min", k_min, "Smallest k considered for the optimum");
    optimize->add_option("--out", out_path, "Surface CSV")->required();
    optimize->callback([&] {
        action = [&] {
            const StateSearch search{parse_k_range(k_text), parse_epsilon_grid(eps_text), n_inits, seed, dim};
            const auto surface = optimize_states(log_returns(read_panel(panel_path)), epochs, search);
            write_surface_csv(out_path, surface);
            print_surface_optimum(surface, k_min);
        };
    });

    auto* fit = states->add_subcommand("fit", "Fit a state model at fixed (k, epsilon)");
    add_panel_epochs(fit);
    fit->add_option("--k", k, "Cluster count");
    fit->add_option("--epsilon", epsilon, "Power-map exponent offset");
    fit->add_option("--plot-dir", plot_dir, "Also write plot-ready CSVs here");
    fit->add_option("--out", out_path, "Model JSON")->required();
    fit->callback([&] {
        action = [&] {
            const auto series = epoch_correlations(log_returns(read_panel(panel_path)), epochs);
            const StateFit result = fit_states(series.values(), k, epsilon, n_inits, seed, dim);
            write_json(out_path, model_to_json(result.model, result.run, series.start_dates(), series.tickers, "stock"));
            if (!plot_dir.empty())
                emit_plot_data(result.model, result.embedding, series.start_dates(), series.tickers, plot_dir);
        };
    });

    auto* topdown = states->add_subcommand("topdown", "Recursive bisection until cluster radii fall below a threshold");
    double radius = 0.0;
    topdown->add_option("--series", series_path, "Series file")->required();
    topdown->add_option("--threshold", radius, "Radius threshold")->required();
    topdown->add_option("--seed", seed, "Base seed");
    topdown->add_option("--dim", dim, "MDS dimension");
    topdown->add_option("--out", out_path, "Labels CSV")->required();
    topdown->callback([&] {
        action = [&] {
            const auto series = read_series(series_path);
            const auto labels = topdown_cluster(similarity_matrix(series.values()), radius, seed, dim);
            std::string csv = "epoch_index,date,cluster\n";
            const auto dates = series.start_dates();
            for (std::size_t i = 0; i < labels.size(); ++i)
                csv += std::to_string(i + 1) + "," + dates[i] + "," + std::to_string(labels[i] + 1) + "\n";
            write_file(out_path, csv);
            std::cout << "clusters=" << (labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1) << "\n";
        };
    });

    // sectors fit | optimize | displace
    auto* sectors = app.add_subcommand("sectors", "Sector-averaged analysis");
    sectors->require_subcommand(1);
    bool include_self = false;
    std::string compare_path;
    auto sector_diag = [&] { return include_self ? SectorDiagonal::IncludeSelfPairs : SectorDiagonal::ExcludeSelfPairs; };

    auto* sfit = sectors->add_subcommand("fit", "Sector-level state model");
    add_panel_epochs(sfit);
    sfit->add_option("--sectors", sectors_path, "Sector CSV (overrides the panel's map)");
    sfit->add_option("--k", k, "Cluster count");
    sfit->add_option("--epsilon", epsilon, "Power-map exponent offset");
    sfit->add_flag("--include-self-pairs", include_self, "Average M_aa over i == j too");
    sfit->add_option("--compare-return-average", compare_path,
                     "Diagnostics: mean off-diagonal correlation per epoch, sector-averaged-returns method");
    sfit->add_option("--out", out_path, "Model JSON")->required();
    sfit->callback([&] {
        action = [&] {
            const ReturnPanel returns = log_returns(panel_with_sectors(panel_path, sectors_path));
            const SectorFit result = sector_state_pipeline(returns, epochs, k, epsilon, n_inits, seed, dim, sector_diag());
            const auto dates = epoch_correlations(returns, epochs).start_dates();
            Json j = model_to_json(result.fit.model, result.fit.run, dates, result.sectors, "sector");
            j["diagonal"] = to_string(sector_diag());
            write_json(out_path, j);
            if (!compare_path.empty()) {
                const auto direct = sector_series(epoch_correlations(returns, epochs), returns.sector_of, sector_diag());
                const auto averaged = sector_return_correlations(returns, epochs);
                std::string csv = "epoch_index,date,mean_sector_matrix,mean_return_average_matrix\n";
                for (std::size_t f = 0; f < averaged.size(); ++f)
                    csv += std::to_string(f + 1) + "," + dates[f] + "," + format_double(direct[f].values.mean()) + "," +
                           format_double(averaged[f].mean()) + "\n";
                write_file(compare_path, csv);
            }
        };
    });

    auto* soptimize = sectors->add_subcommand("optimize", "sigma(d_intra) surface on sector matrices");
    add_panel_epochs(soptimize);
    soptimize->add_option("--sectors", sectors_path, "Sector CSV (overrides the panel's map)");
    soptimize->add_option("--k", k_text, "k range a..b or list");
    soptimize->add_option("--epsilon", eps_text, "epsilon grid a:step:b or list");
    soptimize->add_option("--k-min", k_min, "Smallest k considered for the optimum");
    soptimize->add_flag("--include-self-pairs", include_self, "Average M_aa over i == j too");
    soptimize->add_option("--out", out_path, "Surface CSV")->required();
    soptimize->callback([&] {
        action = [&] {
            const ReturnPanel returns = log_returns(panel_with_sectors(panel_path, sectors_path));
            const auto mats = sector_series(epoch_correlations(returns, epochs), returns.sector_of, sector_diag());
            std::vector<Matrix> raw;
            for (const auto& m : mats) raw.push_back(m.values);
            const StateSearch search{parse_k_range(k_text), parse_epsilon_grid(eps_text), n_inits, seed, dim};
            const auto surface = optimize_over_series(raw, search);
            write_surface_csv(out_path, surface);
            print_surface_optimum(surface, k_min);
        };
    });

    auto* displace = sectors->add_subcommand("displace", "Sector-vs-stock state displacement histogram");
    std::string stock_model, sector_model;
    displace->add_option("--stock-model", stock_model, "Stock-level model JSON")->required();
    displace->add_option("--sector-model", sector_model, "Sector-level model JSON")->required();
    displace->add_option("--out", out_path, "Report JSON")->required();
    displace->callback([&] {
        action = [&] {
            const auto report = displacement(read_model_states(stock_model), read_model_states(sector_model));
            write_json(out_path, displacement_to_json(report));
            for (const auto& [d, count] : report.histogram) std::cout << "d=" << d << ": " << count << "\n";
        };
    });

    // trajectory [catalog]
    auto* trajectory = app.add_subcommand("trajectory", "Variance-ratio analysis of an event window");
    trajectory->require_subcommand(0, 1);
    TrajectoryConfig tconf;
    std::string center, start, end, events_path;
    int width = 125;
    trajectory->add_option("--panel", panel_path, "Panel file");
    trajectory->add_option("--center", center, "Centre date");
    trajectory->add_option("--start", start, "Start date (with --end, instead of --center)");
    trajectory->add_option("--end", end, "End date");
    trajectory->add_option("--width", width, "Window width in price days");
    trajectory->add_option("--T", tconf.epochs.length, "Epoch length in days");
    trajectory->add_option("--shift", tconf.epochs.shift, "Epoch shift in days");
    trajectory->add_option("--epsilon", tconf.epsilon, "Power-map exponent offset");
    trajectory->add_option("--dim", tconf.dimension, "MDS dimension");
    trajectory->add_option("--threshold", tconf.threshold, "CRITICAL below this variance ratio");
    trajectory->add_option("--out", out_path, "Report JSON");

    auto* catalog = trajectory->add_subcommand("catalog", "Batch over an events CSV (name,center_date)");
    catalog->add_option("--events", events_path, "Events CSV")->required();
    catalog->fallthrough();

    trajectory->callback([&] {
        action = [&] {
            if (panel_path.empty() || out_path.empty()) throw std::invalid_argument("trajectory needs --panel and --out");
            const PricePanel panel = read_panel(panel_path);
            if (catalog->parsed()) {
                const auto result = classify_catalog(panel, load_catalog(events_path), tconf, width);
                write_json(out_path, catalog_to_json(result, tconf.threshold));
                for (const auto& r : result.reports)
                    std::cout << r.name << ": ratio=" << r.var_ratio << " " << to_string(r.classification) << "\n";
                return;
            }
            EventWindow window;
            if (!start.empty() || !end.empty()) {
                if (start.empty() || end.empty()) throw std::invalid_argument("--start and --end go together");
                window = cut_window_range(panel, start, end);
            } else if (!center.empty()) {
                window = cut_window(panel, center, width);
            } else {
                throw std::invalid_argument("trajectory needs --center or --start/--end");
            }
            const auto report = analyze_trajectory(window, tconf);
            write_json(out_path, trajectory_to_json(report));
            std::cout << report.name << ": ratio=" << report.var_ratio << " " << to_string(report.classification) << "\n";
        };
    });

    // run / demo
    auto* run = app.add_subcommand("run", "Full pipeline from a config file");
    std::string config_path;
    std::vector<std::string> overrides;
    bool force = false;
    run->add_option("--config", config_path, "Flat key = value config")->required();
    run->add_option("--set", overrides, "key=value override (repeatable)");
    run->add_flag("--force", force, "Rerun stages even if up to date");

    auto* demo = app.add_subcommand("demo", "Write the synthetic fixture and run the pipeline on it");
    std::string demo_dir = "mstates_demo";
    demo->add_option("--dir", demo_dir, "Fixture directory");
    demo->add_flag("--force", force, "Rerun stages even if up to date");

    int pipeline_exit = kExitOk;
    auto run_config = [&](PipelineConfig config) {
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + o + "'");
            config.set(o.substr(0, eq), o.substr(eq + 1));
        }
        if (const char* env = std::getenv("MSTATES_OUTPUT_DIR"); env && *env) config.output_dir = env;
        const PipelineResult result = run_pipeline(config, force);
        for (const auto& s : result.stages) std::cout << s.name << ": " << s.status << "\n";
        std::cout << "manifest: " << result.manifest_path << "\n";
        pipeline_exit = result.exit_code;
    };
    run->callback([&] { action = [&] { run_config(load_config(config_path)); }; });
    demo->callback([&] { action = [&] { run_config(write_demo_fixture(demo_dir)); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    set_worker_count(workers);
    spdlog::set_level(quiet ? spdlog::level::err : spdlog::level::info);
    spdlog::set_pattern("[%l] %v");

    try {
        action();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for_current_exception();
    }
    return pipeline_exit;
}
