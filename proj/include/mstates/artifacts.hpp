#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "mstates/geometry.hpp"
#include "mstates/rmt.hpp"
#include "mstates/sector.hpp"
#include "mstates/states.hpp"
#include "mstates/trajectory.hpp"

namespace mstates {

using Json = nlohmann::ordered_json;

// Every CSV written here has a header row; numbers use shortest round-trip
// formatting so files parse back losslessly.

void write_density_csv(const std::string& path, const SpectralDensity& density);

/// epoch_index, date, x, y, z (further axes named d4, d5, ...) and an
/// optional 1-based state column.
void write_coords_csv(const std::string& path, const Matrix& coordinates, const std::vector<std::string>& dates,
                      const std::vector<int>& states = {});

struct CoordsTable {
    std::vector<int> epochs;
    std::vector<std::string> dates;
    Matrix coordinates;
    std::vector<int> states;  // 0-based; empty if the file has no state column
};
CoordsTable read_coords_csv(const std::string& path);

void write_surface_csv(const std::string& path, const OptimizationSurface& surface);
OptimizationSurface read_surface_csv(const std::string& path);

/// from, to, count with 1-based state numbers; k^2 rows.
void write_transitions_csv(const std::string& path, const CountMatrix& counts);
CountMatrix read_transitions_csv(const std::string& path);

void write_matrix_csv(const std::string& path, const Matrix& m, const std::vector<std::string>& names);

Json embedding_diagnostics(const Embedding& embedding);

/// Model JSON: labels (1-based states per epoch), dates, centroids, per-state
/// average matrices, mean correlations, occupancy, transition counts.
Json model_to_json(const StateModel& model, const ClusteringRun& run, const std::vector<std::string>& dates,
                   const std::vector<std::string>& names, const std::string& level);
/// 0-based state sequence of a model JSON file.
std::vector<int> read_model_states(const std::string& path);

Json displacement_to_json(const DisplacementReport& report);
Json trajectory_to_json(const TrajectoryReport& report);
Json catalog_to_json(const CatalogResult& result, double threshold);

void write_json(const std::string& path, const Json& json);

/// Writes coords.csv (epoch, date, x, y, z, state), transitions.csv and
/// state_avg_corr_S<i>.csv into out_dir. Returns the written paths.
std::vector<std::string> emit_plot_data(const StateModel& model, const Embedding& embedding,
                                        const std::vector<std::string>& dates, const std::vector<std::string>& names,
                                        const std::string& out_dir);

}  // namespace mstates
