#include "mstates/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "mstates/ingest.hpp"

namespace fs = std::filesystem;

namespace mstates {

int exit_code_for_current_exception() {
    try {
        throw;
    } catch (const DataError&) {
        return kExitData;
    } catch (const NumericError&) {
        return kExitNumeric;
    } catch (const std::invalid_argument&) {
        return kExitUsage;
    } catch (const nlohmann::json::exception&) {
        return kExitData;
    } catch (...) {
        return kExitNumeric;
    }
}

std::uint64_t subseed(std::uint64_t seed, std::uint64_t stage_id) {
    std::uint64_t z = seed + stage_id + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

double parse_number(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(trim(text), &used);
        if (used == trim(text).size()) return v;
    } catch (const std::exception&) {
    }
    throw std::invalid_argument("bad number '" + text + "' for " + what);
}

int parse_int(const std::string& text, const std::string& what) {
    const double v = parse_number(text, what);
    if (v != std::floor(v)) throw std::invalid_argument("'" + text + "' is not an integer for " + what);
    return static_cast<int>(v);
}

}  // namespace

std::vector<double> parse_epsilon_grid(const std::string& text) {
    std::vector<double> grid;
    const auto parts = split(trim(text), ':');
    if (parts.size() == 3) {
        const double lo = parse_number(parts[0], "epsilon grid");
        const double step = parse_number(parts[1], "epsilon grid");
        const double hi = parse_number(parts[2], "epsilon grid");
        if (!(step > 0.0) || hi < lo) throw std::invalid_argument("epsilon grid '" + text + "' is empty");
        const auto count = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
        for (int i = 0; i < count; ++i) grid.push_back(std::round((lo + i * step) * 1e12) / 1e12);
    } else if (parts.size() == 1) {
        for (const auto& p : split(trim(text), ',')) grid.push_back(parse_number(p, "epsilon list"));
    } else {
        throw std::invalid_argument("epsilon grid must be 'a:step:b' or a comma list, got '" + text + "'");
    }
    for (double e : grid)
        if (e < 0.0) throw std::invalid_argument("epsilon values must be >= 0");
    return grid;
}

std::vector<int> parse_k_range(const std::string& text) {
    std::vector<int> ks;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const int lo = parse_int(text.substr(0, dots), "k range");
        const int hi = parse_int(text.substr(dots + 2), "k range");
        if (hi < lo) throw std::invalid_argument("k range '" + text + "' is empty");
        for (int k = lo; k <= hi; ++k) ks.push_back(k);
    } else {
        for (const auto& p : split(trim(text), ',')) ks.push_back(parse_int(p, "k list"));
    }
    for (int k : ks)
        if (k < 1) throw std::invalid_argument("k values must be >= 1");
    return ks;
}

void PipelineConfig::set(const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    if (key == "prices") prices = value;
    else if (key == "sectors") sectors = value;
    else if (key == "events") events = value;
    else if (key == "output_dir") output_dir = value;
    else if (key == "max_gap") max_gap = parse_int(value, key);
    else if (key == "T") epochs.length = parse_int(value, key);
    else if (key == "shift") epochs.shift = parse_int(value, key);
    else if (key == "epsilon") epsilons = parse_epsilon_grid(value);
    else if (key == "k") k_values = parse_k_range(value);
    else if (key == "k_min") k_min = parse_int(value, key);
    else if (key == "inits") n_inits = parse_int(value, key);
    else if (key == "seed") seed = std::stoull(value);
    else if (key == "mds_dim") mds_dim = parse_int(value, key);
    else if (key == "mds_epsilon") mds_epsilon = parse_number(value, key);
    else if (key == "threshold") threshold = parse_number(value, key);
    else if (key == "window") window = parse_int(value, key);
    else if (key == "sector_diagonal") sector_diagonal = value;
    else if (key == "rmt_N") rmt_n = parse_int(value, key);
    else if (key == "rmt_T") rmt_t = parse_int(value, key);
    else if (key == "rmt_ensemble") rmt_ensemble = parse_int(value, key);
    else if (key == "rmt_bins") rmt_bins = parse_int(value, key);
    else throw std::invalid_argument("unknown config key '" + key + "'");
}

void PipelineConfig::validate() const {
    if (prices.empty()) throw std::invalid_argument("config: 'prices' is required");
    for (const auto* path : {&prices, &sectors, &events})
        if (!path->empty() && !fs::exists(*path)) throw DataError("config: input file '" + *path + "' does not exist");
    if (max_gap < 0) throw std::invalid_argument("config: max_gap must be >= 0");
    epochs.validate();
    if (epsilons.empty() || k_values.empty()) throw std::invalid_argument("config: epsilon grid and k range must be non-empty");
    if (n_inits < 2) throw std::invalid_argument("config: inits must be >= 2");
    if (mds_dim < 1) throw std::invalid_argument("config: mds_dim must be >= 1");
    if (mds_epsilon < 0.0) throw std::invalid_argument("config: mds_epsilon must be >= 0");
    if (!(threshold > 0.0)) throw std::invalid_argument("config: threshold must be > 0");
    if (window < 3 || window % 2 == 0) throw std::invalid_argument("config: window must be odd and >= 3");
    if (sector_diagonal != "exclude_self_pairs" && sector_diagonal != "include_self_pairs")
        throw std::invalid_argument("config: sector_diagonal must be exclude_self_pairs or include_self_pairs");
    if (rmt_n < 1 || rmt_t < 1 || rmt_ensemble < 1 || rmt_bins < 1)
        throw std::invalid_argument("config: rmt sizes must be >= 1");
}

PipelineConfig parse_config(const std::string& text, const std::string& base_dir) {
    PipelineConfig config;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(number) + " has no '='");
        config.set(line.substr(0, eq), line.substr(eq + 1));
    }
    if (!base_dir.empty()) {
        for (auto* path : {&config.prices, &config.sectors, &config.events, &config.output_dir})
            if (!path->empty() && fs::path(*path).is_relative()) *path = (fs::path(base_dir) / *path).string();
    }
    return config;
}

PipelineConfig load_config(const std::string& path) {
    return parse_config(read_file(path), fs::path(path).parent_path().string());
}

namespace {

struct Stage {
    std::string name;
    bool applicable = true;
    std::vector<std::string> inputs;  // absolute paths hashed into inputs_hash
    Json params;
    std::string artifact;                             // relative to output dir
    std::function<std::vector<std::string>()> body;  // returns relative outputs
};

Json load_previous_manifest(const fs::path& path) {
    if (!fs::exists(path)) return Json();
    try {
        return Json::parse(read_file(path.string()));
    } catch (const std::exception&) {
        return Json();
    }
}

bool up_to_date(const Json& previous, const std::string& name, const std::string& inputs_hash, const fs::path& out,
                StageRecord& record) {
    if (!previous.is_object() || !previous.contains("stages")) return false;
    for (const auto& s : previous["stages"]) {
        if (s.value("name", "") != name) continue;
        const auto status = s.value("status", "");
        if ((status != "done" && status != "up_to_date") || s.value("inputs_hash", "") != inputs_hash) return false;
        std::vector<std::pair<std::string, std::string>> outputs;
        for (const auto& o : s["outputs"]) {
            const auto rel = o.value("path", "");
            const auto file = out / rel;
            if (!fs::exists(file) || sha256_file(file.string()) != o.value("sha256", "")) return false;
            outputs.emplace_back(rel, o.value("sha256", ""));
        }
        record.outputs = std::move(outputs);
        return true;
    }
    return false;
}

Json manifest_json(const PipelineResult& result) {
    Json j;
    j["format"] = "mstates-manifest-v1";
    bool complete = true;
    Json stages = Json::array();
    for (const auto& s : result.stages) {
        if (s.status == "failed" || s.status == "not_run") complete = false;
        Json st;
        st["name"] = s.name;
        st["status"] = s.status;
        st["inputs_hash"] = s.inputs_hash;
        st["params"] = s.params;
        st["artifact"] = s.artifact;
        Json outs = Json::array();
        for (const auto& [path, hash] : s.outputs) outs.push_back({{"path", path}, {"sha256", hash}});
        st["outputs"] = outs;
        if (!s.error.empty()) st["error"] = s.error;
        stages.push_back(std::move(st));
    }
    j["complete"] = complete;
    j["exit_code"] = result.exit_code;
    j["stages"] = stages;
    return j;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, bool force) {
    PipelineResult result;
    config.validate();

    const fs::path out(config.output_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw DataError("cannot create output directory '" + config.output_dir + "': " + ec.message());
    result.manifest_path = (out / "manifest.json").string();
    const Json previous = force ? Json() : load_previous_manifest(result.manifest_path);

    auto at = [&](const std::string& rel) { return (out / rel).string(); };
    const SectorDiagonal diagonal = config.sector_diagonal == "include_self_pairs" ? SectorDiagonal::IncludeSelfPairs
                                                                                    : SectorDiagonal::ExcludeSelfPairs;
    const bool have_sectors = !config.sectors.empty();
    const bool have_events = !config.events.empty();

    std::vector<Stage> stages;

    {
        Stage s{"ingest", true, {config.prices}, {{"max_gap", config.max_gap}}, "panel.csv", {}};
        if (have_sectors) s.inputs.push_back(config.sectors);
        s.body = [&] {
            PricePanel panel = load_prices(config.prices, ContinuityPolicy{config.max_gap});
            if (have_sectors) panel.sector_of = load_sectors(config.sectors);
            if (panel.tickers.empty()) throw DataError("no ticker survived the continuity filter");
            write_panel(at("panel.csv"), panel);
            return std::vector<std::string>{"panel.csv", "panel.csv.json"};
        };
        stages.push_back(std::move(s));
    }
    {
        Stage s{"corr", true, {at("panel.csv"), at("panel.csv.json")},
                {{"T", config.epochs.length}, {"shift", config.epochs.shift}}, "series.bin", {}};
        s.body = [&] {
            write_series(at("series.bin"), epoch_correlations(log_returns(read_panel(at("panel.csv"))), config.epochs));
            return std::vector<std::string>{"series.bin"};
        };
        stages.push_back(std::move(s));
    }
    {
        WishartSpec spec;
        spec.n_series = config.rmt_n;
        spec.length = config.rmt_t;
        spec.ensemble_size = config.rmt_ensemble;
        spec.seed = subseed(config.seed, 1);
        Stage s{"rmt", true, {},
                {{"N", spec.n_series}, {"T", spec.length}, {"ensemble", spec.ensemble_size}, {"bins", config.rmt_bins},
                 {"seed", spec.seed}, {"sigma2", spec.sigma2}, {"mean", spec.mean}},
                "rmt_density.csv", {}};
        s.body = [&, spec] {
            const SpectralDensity density = powermapped_spectrum(spec, 0.0, config.rmt_bins);
            write_density_csv(at("rmt_density.csv"), density);
            Json meta{{"Q", density.q},
                      {"lambda_min", density.lambda_min},
                      {"lambda_max", density.lambda_max},
                      {"l1_distance", l1_distance_to_mp(density, density.q, spec.sigma2)},
                      {"fraction_outside", density.fraction_outside()}};
            write_json(at("rmt_density.json"), meta);
            return std::vector<std::string>{"rmt_density.csv", "rmt_density.json"};
        };
        stages.push_back(std::move(s));
    }
    {
        Stage s{"mds", true, {at("series.bin")}, {{"dim", config.mds_dim}, {"epsilon", config.mds_epsilon}},
                "mds_coords.csv", {}};
        s.body = [&] {
            const auto series = power_map(read_series(at("series.bin")), config.mds_epsilon);
            const Embedding embedding = classical_mds(similarity_matrix(series.values()), config.mds_dim);
            write_coords_csv(at("mds_coords.csv"), embedding.coordinates, series.start_dates());
            write_json(at("mds_diagnostics.json"), embedding_diagnostics(embedding));
            return std::vector<std::string>{"mds_coords.csv", "mds_diagnostics.json"};
        };
        stages.push_back(std::move(s));
    }

    const Json search_params{{"k", config.k_values}, {"epsilon", config.epsilons}, {"inits", config.n_inits},
                             {"mds_dim", config.mds_dim}, {"k_min", config.k_min}};
    auto choose = [&](const OptimizationSurface& surface) {
        const int k_min = std::min(config.k_min, *std::max_element(config.k_values.begin(), config.k_values.end()));
        return select_optimum(surface, k_min);
    };

    {
        StateSearch search{config.k_values, config.epsilons, config.n_inits, subseed(config.seed, 2), config.mds_dim};
        Json params = search_params;
        params["seed"] = search.seed;
        Stage s{"states", true, {at("series.bin")}, params, "model.json", {}};
        s.body = [&, search] {
            const auto series = read_series(at("series.bin"));
            const auto raw = series.values();
            const OptimizationSurface surface = optimize_over_series(raw, search);
            write_surface_csv(at("surface.csv"), surface);
            const auto [k, epsilon] = choose(surface);
            const StateFit fit = fit_states(raw, k, epsilon, search.n_inits, search.seed, search.mds_dim);
            write_json(at("model.json"), model_to_json(fit.model, fit.run, series.start_dates(), series.tickers, "stock"));
            std::vector<std::string> outputs{"surface.csv", "model.json"};
            for (const auto& p : emit_plot_data(fit.model, fit.embedding, series.start_dates(), series.tickers, at("plot")))
                outputs.push_back(fs::relative(p, out).string());
            return outputs;
        };
        stages.push_back(std::move(s));
    }
    {
        StateSearch search{config.k_values, config.epsilons, config.n_inits, subseed(config.seed, 3), config.mds_dim};
        Json params = search_params;
        params["seed"] = search.seed;
        params["diagonal"] = config.sector_diagonal;
        Stage s{"sectors", have_sectors, {at("panel.csv.json"), at("series.bin"), at("model.json")}, params,
                "sector_model.json", {}};
        s.body = [&, search] {
            const PricePanel panel = read_panel(at("panel.csv"));
            const auto series = read_series(at("series.bin"));
            const auto sector_mats = sector_series(series, panel.sector_of, diagonal);
            std::vector<Matrix> raw;
            for (const auto& m : sector_mats) raw.push_back(m.values);
            const OptimizationSurface surface = optimize_over_series(raw, search);
            write_surface_csv(at("sector_surface.csv"), surface);
            const auto [k, epsilon] = choose(surface);
            const StateFit fit = fit_states(raw, k, epsilon, search.n_inits, search.seed, search.mds_dim);
            write_json(at("sector_model.json"),
                       model_to_json(fit.model, fit.run, series.start_dates(), sector_mats.front().sectors, "sector"));
            const auto report = displacement(read_model_states(at("model.json")), fit.model.state_of);
            write_json(at("displacement.json"), displacement_to_json(report));
            return std::vector<std::string>{"sector_surface.csv", "sector_model.json", "displacement.json"};
        };
        stages.push_back(std::move(s));
    }
    {
        TrajectoryConfig tc;
        tc.epochs = config.epochs;
        tc.dimension = config.mds_dim;
        tc.threshold = config.threshold;
        Stage s{"trajectory", have_events, {at("panel.csv")},
                {{"T", tc.epochs.length}, {"shift", tc.epochs.shift}, {"window", config.window},
                 {"dim", tc.dimension}, {"threshold", tc.threshold}, {"epsilon", tc.epsilon}},
                "trajectory_report.json", {}};
        if (have_events) s.inputs.push_back(config.events);
        s.body = [&, tc] {
            const CatalogResult result =
                classify_catalog(read_panel(at("panel.csv")), load_catalog(config.events), tc, config.window);
            write_json(at("trajectory_report.json"), catalog_to_json(result, tc.threshold));
            return std::vector<std::string>{"trajectory_report.json"};
        };
        stages.push_back(std::move(s));
    }

    bool halted = false;
    for (auto& stage : stages) {
        StageRecord record;
        record.name = stage.name;
        record.params = stage.params;
        if (halted) {
            record.status = "not_run";
            result.stages.push_back(std::move(record));
            continue;
        }
        if (!stage.applicable) {
            record.status = "not_applicable";
            result.stages.push_back(std::move(record));
            continue;
        }
        record.artifact = stage.artifact;

        std::string fingerprint = stage.name + "\n" + stage.params.dump() + "\n";
        for (const auto& input : stage.inputs) fingerprint += sha256_file(input) + "\n";
        record.inputs_hash = sha256_hex(fingerprint);

        if (up_to_date(previous, stage.name, record.inputs_hash, out, record)) {
            spdlog::info("stage {}: up to date", stage.name);
            record.status = "up_to_date";
            result.stages.push_back(std::move(record));
            continue;
        }

        spdlog::info("stage {}: running", stage.name);
        try {
            for (const auto& rel : stage.body()) record.outputs.emplace_back(rel, sha256_file(at(rel)));
            record.status = "done";
        } catch (const std::exception& e) {
            result.exit_code = exit_code_for_current_exception();
            record.status = "failed";
            record.error = e.what();
            record.outputs.clear();
            spdlog::error("stage {} failed: {}", stage.name, e.what());
            halted = true;
        }
        result.stages.push_back(std::move(record));
    }

    write_json(result.manifest_path, manifest_json(result));
    return result;
}

PipelineConfig write_demo_fixture(const std::string& dir, std::uint64_t seed) {
    fs::create_directories(dir);
    const fs::path root(dir);

    const std::vector<std::string> sector_names{"Energy", "Finance", "Health", "Tech"};
    constexpr int kPerSector = 5;
    constexpr int kDays = 640;

    // Regime schedule: 0 calm, 1 normal, 2 crisis.
    auto regime = [](int day) {
        if (day < 160) return 0;
        if (day < 300) return 1;
        if (day < 330) return 2;
        if (day < 480) return 1;
        return 0;
    };
    constexpr double kMarketLoading[] = {0.25, 0.5, 0.9};
    constexpr double kVolatility[] = {0.008, 0.012, 0.03};
    constexpr double kSectorLoading = 0.3;

    std::vector<std::string> tickers;
    SectorMap sector_of;
    for (std::size_t s = 0; s < sector_names.size(); ++s)
        for (int i = 0; i < kPerSector; ++i) {
            tickers.push_back(sector_names[s].substr(0, 3) + std::to_string(i + 1));
            sector_of[tickers.back()] = sector_names[s];
        }
    const std::size_t n = tickers.size();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix log_price = Matrix::Zero(static_cast<Eigen::Index>(n) + 1, kDays);
    for (int t = 1; t < kDays; ++t) {
        const int r = regime(t);
        const double beta = kMarketLoading[r];
        const double idio = std::sqrt(1.0 - beta * beta - kSectorLoading * kSectorLoading);
        const double market = normal(rng);
        std::vector<double> sector_factor(sector_names.size());
        for (auto& f : sector_factor) f = normal(rng);
        for (std::size_t i = 0; i <= n; ++i) {
            const double sf = i < n ? sector_factor[i / kPerSector] : normal(rng);
            const double ret = kVolatility[r] * (beta * market + kSectorLoading * sf + idio * normal(rng));
            log_price(static_cast<Eigen::Index>(i), t) = log_price(static_cast<Eigen::Index>(i), t - 1) + ret;
        }
    }

    std::vector<std::string> dates;
    std::chrono::sys_days day = std::chrono::year{2018} / std::chrono::January / 1;
    while (static_cast<int>(dates.size()) < kDays) {
        const std::chrono::weekday wd{day};
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) {
            const std::chrono::year_month_day ymd{day};
            char buf[16];
            std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                          static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
            dates.emplace_back(buf);
        }
        day += std::chrono::days{1};
    }

    // Two isolated blanks exercise forward-fill; GAPPY has a 3-day hole and
    // is dropped by the continuity filter.
    auto blank = [](std::size_t i, int t) {
        if (i == 2 && (t == 50 || t == 400)) return true;
        if (i == 20 && t >= 200 && t < 203) return true;
        return false;
    };
    std::string csv = "date";
    for (const auto& t : tickers) csv += "," + t;
    csv += ",GAPPY\n";
    for (int t = 0; t < kDays; ++t) {
        csv += dates[static_cast<std::size_t>(t)];
        for (std::size_t i = 0; i <= n; ++i) {
            csv += ",";
            if (!blank(i, t)) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.6f", 100.0 * std::exp(log_price(static_cast<Eigen::Index>(i), t)));
                csv += buf;
            }
        }
        csv += "\n";
    }
    write_file((root / "prices.csv").string(), csv);

    std::string sectors = "ticker,sector\n";
    for (const auto& [t, s] : sector_of) sectors += t + "," + s + "\n";
    sectors += "GAPPY,Tech\n";
    write_file((root / "sectors.csv").string(), sectors);

    std::string events = "name,center_date\n";
    events += "Synthetic crash," + dates[315] + "\n";
    events += "Calm period," + dates[80] + "\n";
    events += "Late calm," + dates[560] + "\n";
    events += "Too early," + dates[20] + "\n";
    write_file((root / "events.csv").string(), events);

    const std::string conf =
        "# synthetic 20-stock demo\n"
        "prices = prices.csv\n"
        "sectors = sectors.csv\n"
        "events = events.csv\n"
        "output_dir = out\n"
        "T = 20\n"
        "shift = 1\n"
        "epsilon = 0:0.25:1\n"
        "k = 2..6\n"
        "k_min = 4\n"
        "inits = 50\n"
        "seed = 7\n"
        "mds_dim = 3\n"
        "threshold = 0.4\n"
        "window = 125\n";
    write_file((root / "demo.conf").string(), conf);
    return load_config((root / "demo.conf").string());
}

}  // namespace mstates
