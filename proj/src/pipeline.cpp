#include "uromt/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "uromt/digest.hpp"
#include "uromt/error.hpp"
#include "uromt/io.hpp"

namespace uromt::pipeline {

namespace {

std::string two_digits(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d", i);
    return buf;
}

json read_json(const fs::path &path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path.filename().string(), "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw FormatError(path.filename().string(), e.what());
    }
}

Vector load_scalar(const fs::path &path, const Grid &grid) {
    auto vol = io::read_volume(path);
    if (vol.grid != grid) throw FormatError("dims", path.string() + " is on a different grid");
    if (vol.components != 1) throw FormatError("components", path.string() + " must be a scalar volume");
    return std::move(vol.values);
}

json cost_json(const CostBreakdown &c) {
    return {{"gamma1", c.kinetic}, {"gamma2", c.source}, {"gamma3", c.mismatch}, {"total", c.total}};
}

Termination parse_termination(const std::string &s) {
    if (s == "max-iters") return Termination::MaxIterations;
    if (s == "line-search-failed") return Termination::LineSearchFailed;
    if (s == "gradient-tol") return Termination::GradientTolerance;
    throw FormatError("termination", "unknown value '" + s + "'");
}

} // namespace

fs::path write_series(const fs::path &dir, const Grid &grid, const GaussianSeries &series) {
    json doc;
    doc["images"] = json::array();
    for (std::size_t i = 0; i < series.images.size(); ++i) {
        const std::string name = "image_" + two_digits(static_cast<int>(i)) + ".hdr";
        io::write_volume(dir / name, grid, series.images[i]);
        doc["images"].push_back(name);
    }
    doc["indicators"] = json::array();
    for (std::size_t p = 0; p < series.indicators.size(); ++p) {
        json pair = json::array();
        for (std::size_t j = 0; j < series.indicators[p].size(); ++j) {
            const std::string name =
                "chi_" + two_digits(static_cast<int>(p)) + "_" + two_digits(static_cast<int>(j)) + ".hdr";
            io::write_volume(dir / name, grid, series.indicators[p][j], 1, io::DType::UInt8);
            pair.push_back(name);
        }
        doc["indicators"].push_back(pair);
    }
    const fs::path path = dir / "series.json";
    io::write_file_atomic(path, doc.dump(2) + "\n");
    return path;
}

SeriesData load_images(const std::vector<fs::path> &headers) {
    if (headers.empty()) throw InvalidArgument("no input images");
    auto first = io::read_volume(headers.front());
    SeriesData s{first.grid, {}, {}, headers};
    for (const auto &h : headers) s.images.push_back(load_scalar(h, s.grid));
    return s;
}

SeriesData load_series(const fs::path &series_json) {
    const json doc = read_json(series_json);
    const fs::path base = series_json.parent_path();
    if (!doc.contains("images") || !doc["images"].is_array())
        throw FormatError("images", "series file needs an 'images' array");
    std::vector<fs::path> headers;
    for (const auto &name : doc["images"]) headers.push_back(base / name.get<std::string>());
    SeriesData s = load_images(headers);
    if (doc.contains("indicators")) {
        for (const auto &pair : doc["indicators"]) {
            IndicatorSeries chi;
            for (const auto &name : pair) {
                chi.push_back(load_scalar(base / name.get<std::string>(), s.grid));
                validate_indicator(chi.back());
            }
            s.indicators.push_back(std::move(chi));
        }
    }
    return s;
}

std::vector<IndicatorSeries> resolve_indicators(const SeriesData &series, const UromtConfig &config) {
    const std::size_t pairs = series.images.size() - 1;
    const auto n = series.grid.size();
    switch (config.indicator) {
    case IndicatorMode::AllOnes:
        return std::vector<IndicatorSeries>(pairs, replicate_indicator(Vector::Ones(n), config.steps));
    case IndicatorMode::Zero:
        return std::vector<IndicatorSeries>(pairs, replicate_indicator(Vector::Zero(n), config.steps));
    case IndicatorMode::CenterRegions:
        break;
    }
    if (series.indicators.size() != pairs)
        throw InvalidArgument("chi = center-regions needs one indicator series per image pair in the series file");
    std::vector<IndicatorSeries> out;
    for (const auto &chi : series.indicators) {
        if (chi.size() == 1) out.push_back(replicate_indicator(chi.front(), config.steps));
        else if (static_cast<int>(chi.size()) == config.steps) out.push_back(chi);
        else throw InvalidArgument("indicator series must hold 1 or m volumes per pair");
    }
    return out;
}

json write_run(const fs::path &out_dir, const Grid &grid, const SequenceResult &result,
               const std::vector<fs::path> &inputs, double seconds) {
    fs::create_directories(out_dir);
    json manifest;
    manifest["software"] = {{"name", "uromt"}, {"version", kVersion}};
    manifest["config_text"] = io::format_config(result.config);
    manifest["config"] = {{"preset", result.config.preset},
                          {"dims", result.config.dims},
                          {"spacing", result.config.spacing},
                          {"q", result.config.frames},
                          {"m", result.config.steps},
                          {"dt", result.config.dt},
                          {"sigma", result.config.sigma},
                          {"alpha", result.config.alpha},
                          {"beta", result.config.beta},
                          {"chi", to_string(result.config.indicator)}};
    manifest["grid"] = {{"dims", grid.dims()}, {"spacing", grid.spacing()}};

    manifest["inputs"] = json::array();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        json entry = {{"path", fs::absolute(inputs[i]).string()}};
        if (i < result.input_digests.size()) entry["values_sha256"] = result.input_digests[i];
        if (fs::exists(inputs[i])) entry["sha256"] = sha256_file(inputs[i]);
        manifest["inputs"].push_back(entry);
    }

    manifest["loops"] = json::array();
    for (std::size_t k = 0; k < result.loops.size(); ++k) {
        const auto &loop = result.loops[k];
        const std::string dir = "loop" + two_digits(static_cast<int>(k) + 1);
        json files = json::array();
        const auto emit = [&](const std::string &name, const Vector &values, int components) {
            const fs::path rel = fs::path(dir) / name;
            io::write_volume(out_dir / rel, grid, values, components);
            fs::path raw = rel;
            raw.replace_extension(".raw");
            files.push_back({{"path", rel.generic_string()}, {"sha256", sha256_file(out_dir / rel)}});
            files.push_back({{"path", raw.generic_string()}, {"sha256", sha256_file(out_dir / raw)}});
        };
        emit("density_step00.hdr", loop.initial, 1);
        for (int j = 0; j < loop.controls.steps(); ++j) {
            emit("velocity_step" + two_digits(j) + ".hdr", loop.controls.velocity(j), 3);
            emit("source_step" + two_digits(j) + ".hdr", loop.controls.source(j), 1);
            emit("density_step" + two_digits(j + 1) + ".hdr", loop.interpolations[static_cast<std::size_t>(j)], 1);
        }
        json trace = json::array();
        for (const auto &c : loop.cost_trace) trace.push_back(cost_json(c));
        manifest["loops"].push_back({{"loop", k + 1},
                                     {"termination", to_string(loop.termination)},
                                     {"iterations", loop.iterations},
                                     {"cost_trace", trace},
                                     {"files", files}});
    }
    manifest["timings"] = {{"wall_seconds", seconds}};
    io::write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
}

RunData load_run(const fs::path &run_dir) {
    json manifest = read_json(run_dir / "manifest.json");
    const UromtConfig config = io::parse_config_text(manifest.at("config_text").get<std::string>());
    const auto dims = manifest.at("grid").at("dims").get<std::array<std::ptrdiff_t, 3>>();
    const auto spacing = manifest.at("grid").at("spacing").get<std::array<double, 3>>();
    const Grid grid(dims, spacing);

    RunData run{grid, config, {}, {}, manifest};
    for (const auto &in : manifest.at("inputs")) run.images.push_back(load_scalar(in.at("path").get<std::string>(), grid));

    for (const auto &entry : manifest.at("loops")) {
        const fs::path dir = run_dir / ("loop" + two_digits(entry.at("loop").get<int>()));
        Controls controls(grid.size(), config.steps);
        std::vector<Vector> interpolations;
        for (int j = 0; j < config.steps; ++j) {
            auto vel = io::read_volume(dir / ("velocity_step" + two_digits(j) + ".hdr"));
            if (vel.grid != grid || vel.components != 3) throw FormatError("components", "velocity volume must be 3-component");
            controls.velocity(j) = vel.values;
            controls.source(j) = load_scalar(dir / ("source_step" + two_digits(j) + ".hdr"), grid);
            interpolations.push_back(load_scalar(dir / ("density_step" + two_digits(j + 1) + ".hdr"), grid));
        }
        TransportSolution sol{load_scalar(dir / "density_step00.hdr", grid), std::move(controls),
                              std::move(interpolations), {}, parse_termination(entry.at("termination")),
                              entry.at("iterations").get<int>()};
        for (const auto &c : entry.at("cost_trace")) {
            CostBreakdown cb;
            cb.kinetic = c.at("gamma1");
            cb.source = c.at("gamma2");
            cb.mismatch = c.at("gamma3");
            cb.total = c.at("total");
            cb.alpha = config.alpha;
            cb.beta = config.beta;
            sol.cost_trace.push_back(cb);
        }
        run.loops.push_back(std::move(sol));
    }
    return run;
}

json write_post(const fs::path &out_dir, const RunData &run, const PostOptions &options) {
    const int loops = static_cast<int>(run.loops.size());
    const int last = options.last_image < 0 ? loops : options.last_image;
    const EulerianMaps maps = eulerian_maps(run.grid, run.loops, options.first_image, last);

    json listing = json::array();
    const auto emit = [&](const std::string &name, const Vector &values) {
        io::write_volume(out_dir / name, run.grid, values);
        listing.push_back(name);
    };
    for (std::size_t l = 0; l < maps.speed.size(); ++l) {
        const std::string loop = two_digits(options.first_image + 1 + static_cast<int>(l));
        for (std::size_t j = 0; j < maps.speed[l].size(); ++j) {
            emit("speed_loop" + loop + "_step" + two_digits(static_cast<int>(j)) + ".hdr", maps.speed[l][j]);
            emit("source_loop" + loop + "_step" + two_digits(static_cast<int>(j)) + ".hdr", maps.source[l][j]);
        }
    }
    const std::string window = std::to_string(options.first_image) + "-" + std::to_string(last);
    emit("speed_mean_" + window + ".hdr", maps.mean_speed);
    emit("source_mean_" + window + ".hdr", maps.mean_source);

    const std::vector<TransportSolution> window_loops(run.loops.begin() + options.first_image, run.loops.begin() + last);
    const auto seeds = select_seeds(run.grid, window_loops.front().initial, options.seed_threshold, options.seed_stride);
    PathlineOptions po;
    po.substeps = options.substeps;
    po.dt = run.config.dt;
    po.sigma = run.config.sigma;
    po.threads = run.config.deterministic ? 1 : options.threads;
    const auto lines = trace_pathlines(run.grid, window_loops, seeds, po);
    io::write_pathlines_csv(out_dir / "pathlines.csv", lines);
    io::write_flux_csv(out_dir / "flux.csv", flux_vectors(lines));
    io::write_pathlines_vtk(out_dir / "pathlines.vtk", lines);
    for (const char *name : {"pathlines.csv", "flux.csv", "pathlines.vtk"}) listing.push_back(name);
    return listing;
}

MetricsReport write_metrics(const fs::path &csv_path, const RunData &run) {
    const MetricsReport report = metrics_report(run.images, run.loops);
    io::write_metrics_csv(csv_path, report);
    return report;
}

std::map<std::string, std::string> output_digests(const json &manifest) {
    std::map<std::string, std::string> out;
    for (const auto &loop : manifest.at("loops"))
        for (const auto &f : loop.at("files")) out[f.at("path").get<std::string>()] = f.at("sha256").get<std::string>();
    return out;
}

} // namespace uromt::pipeline
