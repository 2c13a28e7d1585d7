#include "cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "uromt/error.hpp"
#include "uromt/io.hpp"
#include "uromt/pipeline.hpp"
#include "uromt/synth.hpp"

namespace uromt::cli {

namespace {

namespace fs = std::filesystem;
using pipeline::json;

struct SynthArgs {
    std::string kind;
    std::string preset = "gauss-test-1";
    std::string out;
    std::vector<std::ptrdiff_t> dims;
};

struct SolveArgs {
    std::string preset;
    std::string config;
    std::string series;
    std::vector<std::string> images;
    std::string out;
    int max_iters = -1;
    double alpha = -1.0;
    double beta = -1.0;
    bool quiet = false;
};

struct PostArgs {
    std::string run;
    std::string out;
    pipeline::PostOptions options;
};

struct MetricsArgs {
    std::string run;
    std::string out;
};

struct InfoArgs {
    std::vector<std::string> paths;
};

int do_synth(const SynthArgs &args, std::ostream &out) {
    if (args.kind != "gaussian") throw InvalidArgument("unknown synthetic series '" + args.kind + "'");
    const UromtConfig config = io::preset(args.preset);
    GaussianSeriesSpec spec;
    spec.dims = config.dims;
    spec.frames = config.frames;
    spec.steps = config.steps;
    if (!args.dims.empty()) {
        if (args.dims.size() != 3) throw InvalidArgument("--dims takes three extents");
        spec.dims = {args.dims[0], args.dims[1], args.dims[2]};
    }
    if (static_cast<int>(spec.gain.size()) != spec.frames) spec.gain.resize(static_cast<std::size_t>(spec.frames), 0.0);
    const GaussianSeries series = gaussian_sphere_series(spec);
    fs::create_directories(args.out);
    const fs::path path = pipeline::write_series(args.out, Grid(spec.dims, config.spacing), series);
    out << "wrote " << series.images.size() << " images to " << path.string() << "\n";
    return 0;
}

int do_solve(const SolveArgs &args, std::ostream &out, std::ostream &err) {
    UromtConfig config = args.config.empty() ? io::preset(args.preset) : io::parse_config(args.config);
    if (args.max_iters >= 0) config.max_outer_iters = args.max_iters;
    if (args.alpha >= 0.0) config.alpha = args.alpha;
    if (args.beta >= 0.0) config.beta = args.beta;

    pipeline::SeriesData series = args.series.empty()
                                      ? pipeline::load_images({args.images.begin(), args.images.end()})
                                      : pipeline::load_series(args.series);
    if (series.images.size() < 2) throw InvalidArgument("need at least two images");
    if (series.grid.dims() != config.dims || series.grid.spacing() != config.spacing ||
        static_cast<std::size_t>(config.frames) != series.images.size()) {
        err << "note: using the grid and frame count of the input images\n";
        config.dims = series.grid.dims();
        config.spacing = series.grid.spacing();
        config.frames = static_cast<int>(series.images.size());
    }
    config.validate();
    const auto chi = pipeline::resolve_indicators(series, config);

    ProgressCallback progress;
    if (!args.quiet) {
        progress = [&err](const IterationReport &r) {
            err << "loop " << r.loop << " iter " << std::setw(3) << r.iteration << "  cost " << std::scientific
                << std::setprecision(6) << r.cost.total << "  (kin " << r.cost.kinetic << ", src " << r.cost.source
                << ", fit " << r.cost.mismatch << ")  |g| " << r.gradient_norm << "  step " << std::defaultfloat
                << r.step_length << "  cg " << r.cg_iterations << (r.steepest_descent_fallback ? "  sd" : "")
                << "\n";
        };
    }

    const auto start = std::chrono::steady_clock::now();
    SequenceResult result;
    int status = 0;
    try {
        result = run_sequence(series.grid, series.images, chi, config, progress);
    } catch (const SequenceAborted &e) {
        err << "error: " << e.what() << "\n";
        if (e.partial().loops.empty()) return 1;
        err << "writing " << e.partial().loops.size() << " completed loop(s)\n";
        result = e.partial();
        status = 1;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    pipeline::write_run(args.out, series.grid, result, series.image_paths, seconds);
    for (std::size_t k = 0; k < result.loops.size(); ++k) {
        const auto &loop = result.loops[k];
        out << "loop " << k + 1 << ": " << loop.iterations << " iterations, " << to_string(loop.termination)
            << ", cost " << loop.cost_trace.front().total << " -> " << loop.cost_trace.back().total << "\n";
    }
    out << "wrote " << (fs::path(args.out) / "manifest.json").string() << "\n";
    return status;
}

int do_post(const PostArgs &args, std::ostream &out) {
    const auto run = pipeline::load_run(args.run);
    const fs::path dir = args.out.empty() ? fs::path(args.run) / "post" : fs::path(args.out);
    fs::create_directories(dir);
    const json listing = pipeline::write_post(dir, run, args.options);
    out << "wrote " << listing.size() << " files to " << dir.string() << "\n";
    return 0;
}

int do_metrics(const MetricsArgs &args, std::ostream &out) {
    const auto run = pipeline::load_run(args.run);
    const fs::path path = args.out.empty() ? fs::path(args.run) / "metrics.csv" : fs::path(args.out);
    const MetricsReport report = pipeline::write_metrics(path, run);
    out << "loop  nmse%        pctm%\n";
    for (std::size_t k = 0; k < report.nmse.size(); ++k)
        out << std::setw(4) << k + 1 << "  " << std::setw(11) << report.nmse[k] << "  " << std::setw(11)
            << report.pctm[k] << "\n";
    out << "wrote " << path.string() << "\n";
    return 0;
}

int do_info(const InfoArgs &args, std::ostream &out) {
    for (const auto &p : args.paths) {
        fs::path path(p);
        if (fs::is_directory(path)) path /= "manifest.json";
        if (path.extension() == ".json") {
            std::ifstream in(path);
            if (!in) throw FormatError("path", "cannot open " + path.string());
            const json doc = json::parse(in);
            out << path.string() << "\n";
            if (doc.contains("loops")) {
                out << "  preset: " << doc["config"]["preset"].get<std::string>() << "\n";
                out << "  loops: " << doc["loops"].size() << "\n";
                for (const auto &loop : doc["loops"])
                    out << "    loop " << loop["loop"] << ": " << loop["iterations"] << " iterations, "
                        << loop["termination"].get<std::string>() << ", " << loop["files"].size() << " files\n";
            } else {
                out << doc.dump(2) << "\n";
            }
            continue;
        }
        const io::VolumeHeader h = io::read_volume_header(path);
        out << path.string() << "\n"
            << "  dims: " << h.dims[0] << " " << h.dims[1] << " " << h.dims[2] << "\n"
            << "  spacing: " << h.spacing[0] << " " << h.spacing[1] << " " << h.spacing[2] << "\n"
            << "  components: " << h.components << "\n"
            << "  dtype: " << io::to_string(h.dtype) << "\n"
            << "  axis_order: " << h.axis_order << "\n"
            << "  endianness: " << h.endianness << "\n"
            << "  data_file: " << h.data_file << "\n";
    }
    return 0;
}

} // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Unbalanced regularized optimal mass transport", "uromt"};
    app.set_version_flag("--version", pipeline::kVersion);
    app.require_subcommand(1);

    SynthArgs synth;
    auto *synth_cmd = app.add_subcommand("synth", "Write a synthetic image series");
    synth_cmd->add_option("kind", synth.kind, "Series kind (gaussian)")->required();
    synth_cmd->add_option("--preset", synth.preset, "Preset supplying grid, q and m")
        ->check(CLI::IsMember(io::preset_names()));
    synth_cmd->add_option("--out", synth.out, "Output directory")->required();
    synth_cmd->add_option("--dims", synth.dims, "Override grid extents")->expected(3);

    SolveArgs solve;
    auto *solve_cmd = app.add_subcommand("solve", "Solve the transport problem for an image series");
    auto *preset_opt = solve_cmd->add_option("--preset", solve.preset, "Named parameter set")
                           ->check(CLI::IsMember(io::preset_names()));
    auto *config_opt = solve_cmd->add_option("--config", solve.config, "Config file")->check(CLI::ExistingFile);
    preset_opt->excludes(config_opt);
    auto *series_opt = solve_cmd->add_option("--series", solve.series, "series.json from `synth`")
                           ->check(CLI::ExistingFile);
    auto *images_opt = solve_cmd->add_option("--images", solve.images, "Image headers in time order");
    series_opt->excludes(images_opt);
    solve_cmd->add_option("--out", solve.out, "Run directory")->required();
    solve_cmd->add_option("--max-iters", solve.max_iters, "Override max_outer_iters");
    solve_cmd->add_option("--alpha", solve.alpha, "Override alpha");
    solve_cmd->add_option("--beta", solve.beta, "Override beta");
    solve_cmd->add_flag("--quiet", solve.quiet, "No per-iteration progress");

    PostArgs post;
    auto *post_cmd = app.add_subcommand("post", "Eulerian maps and pathlines for a run");
    post_cmd->add_option("--run", post.run, "Run directory")->required()->check(CLI::ExistingDirectory);
    post_cmd->add_option("--out", post.out, "Output directory (default RUN/post)");
    post_cmd->add_option("--first", post.options.first_image, "First image of the window (N0)");
    post_cmd->add_option("--last", post.options.last_image, "Last image of the window (N1)");
    post_cmd->add_option("--substeps", post.options.substeps, "Euler substeps per dt");
    post_cmd->add_option("--seed-threshold", post.options.seed_threshold, "Seed where rho > threshold*max");
    post_cmd->add_option("--seed-stride", post.options.seed_stride, "Seed every k-th voxel");
    post_cmd->add_option("--threads", post.options.threads, "Worker threads (0 = auto)");

    MetricsArgs metrics;
    auto *metrics_cmd = app.add_subcommand("metrics", "NMSE, PCTM and total intensities of a run");
    metrics_cmd->add_option("--run", metrics.run, "Run directory")->required()->check(CLI::ExistingDirectory);
    metrics_cmd->add_option("--out", metrics.out, "CSV path (default RUN/metrics.csv)");

    InfoArgs info;
    auto *info_cmd = app.add_subcommand("info", "Print volume headers or run manifests");
    info_cmd->add_option("paths", info.paths, "Header files or run directories")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success &e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError &e) {
        app.exit(e, out, err);
        err << app.help();
        return 2;
    }

    try {
        if (*synth_cmd) return do_synth(synth, out);
        if (*solve_cmd) {
            if (solve.preset.empty() && solve.config.empty()) {
                err << "solve: one of --preset or --config is required\n" << solve_cmd->help();
                return 2;
            }
            if (solve.series.empty() && solve.images.empty()) {
                err << "solve: one of --series or --images is required\n" << solve_cmd->help();
                return 2;
            }
            return do_solve(solve, out, err);
        }
        if (*post_cmd) return do_post(post, out);
        if (*metrics_cmd) return do_metrics(metrics, out);
        if (*info_cmd) return do_info(info, out);
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace uromt::cli
