#include "mstates/artifacts.hpp"

#include <algorithm>
#include <filesystem>
#include <tuple>
#include <sstream>

namespace mstates {

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& path, const std::string& expected_prefix) {
    std::istringstream in(read_file(path));
    std::string line;
    std::vector<std::vector<std::string>> rows;
    if (!std::getline(in, line) || line.rfind(expected_prefix, 0) != 0)
        throw DataError("'" + path + "' does not start with header '" + expected_prefix + "'");
    rows.push_back(split(trim(line), ','));
    while (std::getline(in, line))
        if (!trim(line).empty()) rows.push_back(split(trim(line), ','));
    return rows;
}

double to_double(const std::string& s, const std::string& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw DataError("bad number '" + s + "' in '" + path + "'");
}

std::string axis_name(Eigen::Index d) {
    static const char* names[] = {"x", "y", "z"};
    return d < 3 ? names[d] : "d" + std::to_string(d + 1);
}

Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

void write_json(const std::string& path, const Json& json) { write_file(path, json.dump(2) + "\n"); }

void write_density_csv(const std::string& path, const SpectralDensity& density) {
    std::string out = "bin_left,bin_right,density\n";
    for (std::size_t b = 0; b < density.density.size(); ++b)
        out += format_double(density.bin_edges[b]) + "," + format_double(density.bin_edges[b + 1]) + "," +
               format_double(density.density[b]) + "\n";
    write_file(path, out);
}

void write_coords_csv(const std::string& path, const Matrix& coordinates, const std::vector<std::string>& dates,
                      const std::vector<int>& states) {
    if (dates.size() != static_cast<std::size_t>(coordinates.rows()))
        throw std::invalid_argument("write_coords_csv: date count does not match coordinate rows");
    if (!states.empty() && states.size() != dates.size())
        throw std::invalid_argument("write_coords_csv: state count does not match coordinate rows");
    std::string out = "epoch_index,date";
    for (Eigen::Index d = 0; d < coordinates.cols(); ++d) out += "," + axis_name(d);
    if (!states.empty()) out += ",state";
    out += "\n";
    for (Eigen::Index i = 0; i < coordinates.rows(); ++i) {
        out += std::to_string(i + 1) + "," + dates[static_cast<std::size_t>(i)];
        for (Eigen::Index d = 0; d < coordinates.cols(); ++d) out += "," + format_double(coordinates(i, d));
        if (!states.empty()) out += "," + std::to_string(states[static_cast<std::size_t>(i)] + 1);
        out += "\n";
    }
    write_file(path, out);
}

CoordsTable read_coords_csv(const std::string& path) {
    const auto rows = read_csv(path, "epoch_index,date");
    const auto& header = rows.front();
    const bool has_state = header.back() == "state";
    const auto dims = static_cast<Eigen::Index>(header.size() - 2 - (has_state ? 1 : 0));
    CoordsTable table;
    table.coordinates.resize(static_cast<Eigen::Index>(rows.size() - 1), dims);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        if (f.size() != header.size()) throw DataError("ragged row in '" + path + "'");
        table.epochs.push_back(std::stoi(f[0]));
        table.dates.push_back(f[1]);
        for (Eigen::Index d = 0; d < dims; ++d)
            table.coordinates(static_cast<Eigen::Index>(r - 1), d) = to_double(f[static_cast<std::size_t>(d) + 2], path);
        if (has_state) table.states.push_back(std::stoi(f.back()) - 1);
    }
    return table;
}

void write_surface_csv(const std::string& path, const OptimizationSurface& surface) {
    std::string out = "k,epsilon,sigma_d_intra,mean_d_intra,n_inits\n";
    for (const auto& e : surface.entries)
        out += std::to_string(e.k) + "," + format_double(e.epsilon) + "," + format_double(e.sigma_d_intra) + "," +
               format_double(e.mean_d_intra) + "," + std::to_string(e.n_inits) + "\n";
    write_file(path, out);
}

OptimizationSurface read_surface_csv(const std::string& path) {
    const auto rows = read_csv(path, "k,epsilon,sigma_d_intra");
    OptimizationSurface surface;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        if (f.size() != 5) throw DataError("ragged row in '" + path + "'");
        surface.entries.push_back({std::stoi(f[0]), to_double(f[1], path), to_double(f[2], path),
                                   to_double(f[3], path), std::stoi(f[4])});
    }
    return surface;
}

void write_transitions_csv(const std::string& path, const CountMatrix& counts) {
    std::string out = "from,to,count\n";
    for (Eigen::Index a = 0; a < counts.rows(); ++a)
        for (Eigen::Index b = 0; b < counts.cols(); ++b)
            out += "S" + std::to_string(a + 1) + ",S" + std::to_string(b + 1) + "," + std::to_string(counts(a, b)) + "\n";
    write_file(path, out);
}

CountMatrix read_transitions_csv(const std::string& path) {
    const auto rows = read_csv(path, "from,to,count");
    std::vector<std::tuple<int, int, long>> cells;
    int k = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        if (f.size() != 3 || f[0].empty() || f[1].empty() || f[0][0] != 'S' || f[1][0] != 'S')
            throw DataError("bad transition row in '" + path + "'");
        const int a = std::stoi(f[0].substr(1));
        const int b = std::stoi(f[1].substr(1));
        cells.emplace_back(a - 1, b - 1, std::stol(f[2]));
        k = std::max({k, a, b});
    }
    CountMatrix counts = CountMatrix::Zero(k, k);
    for (const auto& [a, b, c] : cells) counts(a, b) = c;
    return counts;
}

void write_matrix_csv(const std::string& path, const Matrix& m, const std::vector<std::string>& names) {
    if (names.size() != static_cast<std::size_t>(m.rows())) throw std::invalid_argument("write_matrix_csv: name count mismatch");
    std::string out = "name";
    for (const auto& n : names) out += "," + n;
    out += "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out += names[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j) out += "," + format_double(m(i, j));
        out += "\n";
    }
    write_file(path, out);
}

Json embedding_diagnostics(const Embedding& embedding) {
    Json j;
    j["dimension"] = embedding.dimension();
    j["retained_eigenvalues"] = std::vector<double>(embedding.eigenvalues.data(),
                                                    embedding.eigenvalues.data() + embedding.eigenvalues.size());
    j["spectrum"] = std::vector<double>(embedding.spectrum.data(), embedding.spectrum.data() + embedding.spectrum.size());
    j["clipped_count"] = embedding.clipped_count;
    j["clipped_mass_fraction"] = embedding.clipped_mass;
    return j;
}

Json model_to_json(const StateModel& model, const ClusteringRun& run, const std::vector<std::string>& dates,
                   const std::vector<std::string>& names, const std::string& level) {
    Json j;
    j["format"] = "mstates-model-v1";
    j["level"] = level;
    j["k"] = model.k;
    j["epsilon"] = model.epsilon;
    j["seed"] = run.seed;
    j["d_intra"] = run.d_intra;
    j["objective"] = run.objective;
    j["names"] = names;
    j["dates"] = dates;
    std::vector<int> labels;
    labels.reserve(model.state_of.size());
    for (int s : model.state_of) labels.push_back(s + 1);
    j["labels"] = labels;
    j["state_mean_corr"] = model.state_mean_corr;
    j["occupancy"] = model.occupancy;
    j["centroids"] = matrix_json(model.centroids);
    Json counts = Json::array();
    for (Eigen::Index a = 0; a < model.transitions.rows(); ++a) {
        Json row = Json::array();
        for (Eigen::Index b = 0; b < model.transitions.cols(); ++b) row.push_back(model.transitions(a, b));
        counts.push_back(std::move(row));
    }
    j["transition_counts"] = counts;
    Json averages = Json::array();
    for (const auto& m : model.avg_corr) averages.push_back(matrix_json(m));
    j["avg_corr"] = averages;
    return j;
}

std::vector<int> read_model_states(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad model file '" + path + "': " + e.what());
    }
    if (j.value("format", "") != "mstates-model-v1") throw DataError("'" + path + "' is not a model file");
    std::vector<int> states;
    for (int label : j.at("labels").get<std::vector<int>>()) states.push_back(label - 1);
    return states;
}

Json displacement_to_json(const DisplacementReport& report) {
    Json j;
    Json hist = Json::array();
    long total = 0;
    for (const auto& [d, count] : report.histogram) {
        hist.push_back({{"displacement", d}, {"epochs", count}});
        total += count;
    }
    j["histogram"] = hist;
    j["epochs"] = total;
    j["max_abs_displacement"] = report.max_abs_displacement;
    return j;
}

Json trajectory_to_json(const TrajectoryReport& report) {
    Json j;
    j["name"] = report.name;
    j["start"] = report.start_date;
    j["end"] = report.end_date;
    if (!report.center_date.empty()) j["center"] = report.center_date;
    j["epochs"] = report.coordinates.rows();
    j["var_x"] = report.var_x;
    j["var_y"] = report.var_y;
    j["var_z"] = report.var_z;
    j["var_ratio"] = report.var_ratio;
    j["classification"] = to_string(report.classification);
    j["zero_variance"] = report.zero_variance;
    j["axis_order_ok"] = report.axis_order_ok;
    j["step_lengths"] = report.step_lengths;
    return j;
}

Json catalog_to_json(const CatalogResult& result, double threshold) {
    Json j;
    j["threshold"] = threshold;
    Json rows = Json::array();
    for (const auto& r : result.reports) {
        Json row = trajectory_to_json(r);
        row.erase("step_lengths");
        rows.push_back(std::move(row));
    }
    j["events"] = rows;
    Json errors = Json::array();
    for (const auto& e : result.errors) errors.push_back({{"name", e.name}, {"error", e.message}});
    j["errors"] = errors;
    return j;
}

std::vector<std::string> emit_plot_data(const StateModel& model, const Embedding& embedding,
                                        const std::vector<std::string>& dates, const std::vector<std::string>& names,
                                        const std::string& out_dir) {
    if (model.state_of.size() != static_cast<std::size_t>(embedding.coordinates.rows()))
        throw std::invalid_argument("emit_plot_data: model and embedding lengths differ");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create directory '" + out_dir + "': " + ec.message());

    const std::filesystem::path dir(out_dir);
    std::vector<std::string> written;
    written.push_back((dir / "coords.csv").string());
    write_coords_csv(written.back(), embedding.coordinates, dates, model.state_of);
    written.push_back((dir / "transitions.csv").string());
    write_transitions_csv(written.back(), model.transitions);
    for (int s = 0; s < model.k; ++s) {
        written.push_back((dir / ("state_avg_corr_S" + std::to_string(s + 1) + ".csv")).string());
        write_matrix_csv(written.back(), model.avg_corr[static_cast<std::size_t>(s)], names);
    }
    return written;
}

}  // namespace mstates
