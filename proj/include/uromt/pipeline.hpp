#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "uromt/analysis.hpp"
#include "uromt/grid.hpp"
#include "uromt/solver.hpp"
#include "uromt/synth.hpp"

namespace uromt::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char *kVersion = "1.0.0";

/// Input images plus optional per-pair indicator series.
struct SeriesData {
    Grid grid;
    std::vector<Vector> images;
    std::vector<IndicatorSeries> indicators;  // empty when the series carries none
    std::vector<fs::path> image_paths;
};

/// Writes image_XX.hdr, chi_XX_YY.hdr and series.json into `dir`; returns the
/// path of series.json.
fs::path write_series(const fs::path &dir, const Grid &grid, const GaussianSeries &series);

SeriesData load_series(const fs::path &series_json);
SeriesData load_images(const std::vector<fs::path> &headers);

/// Indicator series per pair for the configured mode. center-regions requires the
/// series to carry indicators.
std::vector<IndicatorSeries> resolve_indicators(const SeriesData &series, const UromtConfig &config);

/// Per-loop outputs under `out_dir`:
///   loopKK/velocity_stepJJ.hdr  (3 components, v*_{k,j})
///   loopKK/source_stepJJ.hdr    (r*_{k,j})
///   loopKK/density_stepJJ.hdr   (rho_{k,j}, j = 0..m; j = 0 is the loop's start)
/// plus manifest.json with the config, input digests, cost traces, every output
/// file with its SHA-256, and wall-clock timings. Returns the manifest.
json write_run(const fs::path &out_dir, const Grid &grid, const SequenceResult &result,
               const std::vector<fs::path> &inputs, double seconds);

struct RunData {
    Grid grid;
    UromtConfig config;
    std::vector<Vector> images;
    std::vector<TransportSolution> loops;
    json manifest;
};

RunData load_run(const fs::path &run_dir);

struct PostOptions {
    int first_image = 0;  // N0
    int last_image = -1;  // N1; -1 means q-1
    int substeps = 10;
    double seed_threshold = 0.1;
    int seed_stride = 2;
    int threads = 0;
};

/// Writes Eulerian maps (speed_loopKK_stepJJ.hdr, source_loopKK_stepJJ.hdr,
/// speed_mean_N0-N1.hdr, source_mean_N0-N1.hdr), pathlines.csv,
/// flux.csv and pathlines.vtk under `out_dir`. Returns a listing of files.
json write_post(const fs::path &out_dir, const RunData &run, const PostOptions &options);

/// metrics.csv with per-loop NMSE, PCTM and total intensities.
MetricsReport write_metrics(const fs::path &csv_path, const RunData &run);

/// {"path": sha256} for every output listed in a manifest.
std::map<std::string, std::string> output_digests(const json &manifest);

} // namespace uromt::pipeline
