#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "support.hpp"
#include "uromt/digest.hpp"
#include "uromt/io.hpp"
#include "uromt/pipeline.hpp"

using namespace uromt;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "uromt");
    std::vector<const char *> argv;
    for (const auto &a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = uromt::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> csv_rows(const fs::path &p) {
    std::ifstream in(p);
    std::vector<std::string> rows;
    for (std::string line; std::getline(in, line);) rows.push_back(line);
    return rows;
}

} // namespace

TEST_CASE("usage errors exit with 2") {
    auto r = invoke({"frobnicate"});
    CHECK(r.code == 2);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"solve", "--out", "x"}).code == 2);
    CHECK(invoke({"synth", "gaussian", "--preset", "nope", "--out", "x"}).code == 2);
    CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("runtime failures exit with 1") {
    const auto dir = testing::scratch_dir("cli_fail");
    auto r = invoke({"solve", "--preset", "gauss-test-2", "--images", (dir / "a.hdr").string(), (dir / "b.hdr").string(),
                  "--out", (dir / "run").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("error:") != std::string::npos);
    CHECK(invoke({"synth", "spirals", "--out", dir.string()}).code == 1);
}

TEST_CASE("synth, solve, post, metrics and info") {
    const auto dir = testing::scratch_dir("cli_pipeline");
    const auto series = dir / "series";
    const auto run = dir / "run";

    auto r = invoke({"synth", "gaussian", "--preset", "gauss-test-1", "--out", series.string(), "--dims", "10", "10", "10"});
    REQUIRE(r.code == 0);
    const auto data = pipeline::load_series(series / "series.json");
    CHECK(data.images.size() == 5);
    REQUIRE(data.indicators.size() == 4);
    CHECK(data.indicators[0].size() == 10);
    CHECK(data.grid.dims() == Index3{10, 10, 10});

    r = invoke({"solve", "--preset", "gauss-test-1", "--series", (series / "series.json").string(), "--out", run.string(),
             "--max-iters", "2", "--quiet"});
    REQUIRE(r.code == 0);
    for (int k = 1; k <= 4; ++k) {
        const auto loop = run / ("loop0" + std::to_string(k));
        CHECK(fs::exists(loop / "velocity_step00.hdr"));
        CHECK(fs::exists(loop / "source_step09.hdr"));
        CHECK(fs::exists(loop / "density_step10.hdr"));
    }
    CHECK_FALSE(fs::exists(run / "loop05"));

    std::ifstream mf(run / "manifest.json");
    const auto manifest = pipeline::json::parse(mf);
    CHECK(manifest["loops"].size() == 4);
    CHECK(manifest["config"]["chi"] == "center-regions");
    CHECK(manifest["inputs"].size() == 5);
    for (const auto &[path, digest] : pipeline::output_digests(manifest)) {
        REQUIRE(fs::exists(run / path));
        CHECK(sha256_file(run / path) == digest);
    }

    const auto loaded = pipeline::load_run(run);
    CHECK(loaded.loops.size() == 4);
    CHECK(loaded.config.alpha == 9000.0);
    CHECK(loaded.loops[0].initial == data.images[0]);
    const auto vel = io::read_volume(run / "loop02" / "velocity_step03.hdr");
    CHECK(vel.components == 3);
    CHECK(Vector(loaded.loops[1].controls.velocity(3)) == vel.values);
    CHECK(loaded.loops[2].cost_trace.size() == manifest["loops"][2]["cost_trace"].size());

    r = invoke({"post", "--run", run.string(), "--first", "1", "--last", "3"});
    REQUIRE(r.code == 0);
    for (const char *name : {"speed_mean_1-3.hdr", "source_mean_1-3.hdr", "speed_loop02_step00.hdr",
                             "source_loop03_step09.hdr", "pathlines.csv", "flux.csv", "pathlines.vtk"})
        CHECK(fs::exists(run / "post" / name));
    CHECK_FALSE(fs::exists(run / "post" / "speed_loop01_step00.hdr"));
    CHECK(csv_rows(run / "post" / "pathlines.csv").size() > 1);

    r = invoke({"metrics", "--run", run.string()});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(run / "metrics.csv");
    CHECK(rows.size() == 5);

    r = invoke({"info", (series / "image_00.hdr").string(), run.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("dims: 10 10 10") != std::string::npos);
    CHECK(r.out.find("loops: 4") != std::string::npos);
}

TEST_CASE("metrics on a perfect fit report zero error") {
    const auto dir = testing::scratch_dir("cli_perfect");
    std::mt19937_64 rng(3);
    Grid g({5, 5, 5}, {1, 1, 1});
    io::write_volume(dir / "a.hdr", g, testing::uniform(rng, g.size(), 0.1, 1));
    {
        std::ofstream cfg(dir / "identity.cfg");
        cfg << "n1 = 5\nn2 = 5\nn3 = 5\nq = 3\nm = 2\ndt = 0.4\ndx = 1\ndy = 1\ndz = 1\nsigma = 0\n"
               "alpha = 10000\nbeta = 5000\nchi = all-ones\n";
    }
    const auto a = (dir / "a.hdr").string();
    auto r = invoke({"solve", "--config", (dir / "identity.cfg").string(), "--images", a, a, a, "--out",
                  (dir / "run").string(), "--quiet"});
    REQUIRE(r.code == 0);
    r = invoke({"metrics", "--run", (dir / "run").string()});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(dir / "run" / "metrics.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].rfind("1,0,0,", 0) == 0);
    CHECK(rows[2].rfind("2,0,0,", 0) == 0);
}

TEST_CASE("center-regions needs indicators in the series") {
    const auto dir = testing::scratch_dir("cli_chi");
    Grid g({4, 4, 4}, {1, 1, 1});
    io::write_volume(dir / "a.hdr", g, Vector::Ones(g.size()));
    const auto a = (dir / "a.hdr").string();
    const auto r = invoke({"solve", "--preset", "gauss-test-1", "--images", a, a, "--out", (dir / "run").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("center-regions") != std::string::npos);
}
