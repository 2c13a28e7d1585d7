#include <doctest.h>

#include "support.hpp"
#include "uromt/error.hpp"
#include "uromt/solver.hpp"
#include "uromt/synth.hpp"

using namespace uromt;

namespace {

GaussianSeries translation_series(std::ptrdiff_t extent, int frames, int steps) {
    GaussianSeriesSpec spec;
    spec.dims = {extent, extent, extent};
    spec.frames = frames;
    spec.steps = steps;
    spec.gain.assign(static_cast<std::size_t>(frames), 0.0);
    return gaussian_sphere_series(spec);
}

UromtConfig small_config(std::ptrdiff_t extent, int steps, int iters) {
    UromtConfig c;
    c.dims = {extent, extent, extent};
    c.steps = steps;
    c.max_outer_iters = iters;
    return c;
}

bool strictly_decreasing(const std::vector<CostBreakdown> &trace) {
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (!(trace[i].total < trace[i - 1].total)) return false;
    return true;
}

} // namespace

TEST_CASE("config validation names the key") {
    UromtConfig c;
    CHECK_NOTHROW(c.validate());
    c.sigma = -0.1;
    try {
        c.validate();
        FAIL("expected a validation error");
    } catch (const InvalidArgument &e) {
        CHECK(std::string(e.what()).rfind("sigma", 0) == 0);
    }
    UromtConfig d;
    d.frames = 1;
    CHECK_THROWS_AS(d.validate(), InvalidArgument);
}

TEST_CASE("newton system") {
    std::mt19937_64 rng(1);
    const Vector g = testing::uniform(rng, 20, -1, 1);

    SUBCASE("identity hessian gives the negative gradient in one iteration") {
        const auto s = solve_newton_system([](const Vector &x) { return x; }, g, 1e-2, 20);
        CHECK(s.iterations == 1);
        CHECK((s.direction + g).cwiseAbs().maxCoeff() < 1e-15);
        CHECK_FALSE(s.fallback);
    }
    SUBCASE("spd system converges and keeps the best iterate") {
        const Eigen::MatrixXd A = Eigen::MatrixXd::Random(20, 20);
        const Eigen::MatrixXd H = A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(20, 20);
        const auto s = solve_newton_system([&](const Vector &x) { return Vector(H * x); }, g, 1e-8, 200);
        CHECK((H * s.direction + g).norm() <= 1e-8 * g.norm());
        CHECK(s.relative_residual <= 1e-8);
        CHECK(s.residual_history.front() == 1.0);
    }
    SUBCASE("residual is nonincreasing on a badly scaled psd system") {
        Vector d(20);
        for (int i = 0; i < 20; ++i) d[i] = std::pow(10.0, -12 + i);
        const Eigen::MatrixXd A = Eigen::MatrixXd::Random(20, 20);
        const Eigen::MatrixXd H = A * d.asDiagonal() * A.transpose();
        const auto t = solve_newton_system([&](const Vector &x) { return Vector(H * x); }, g, 1e-12, 15);
        for (std::size_t i = 1; i < t.residual_history.size(); ++i)
            CHECK(t.residual_history[i] <= t.residual_history[i - 1] * (1 + 1e-12));
        CHECK((H * t.direction + g).norm() / g.norm() == doctest::Approx(t.relative_residual).epsilon(1e-9));
        CHECK(t.direction.dot(g) < 0.0);
        CHECK_FALSE(t.fallback);
    }
    SUBCASE("a hessian that vanishes along g triggers the fallback") {
        const auto s = solve_newton_system([](const Vector &x) { return Vector(0.0 * x); }, g, 1e-2, 20);
        CHECK(s.fallback);
        CHECK(s.direction == -g);
    }
    SUBCASE("negative curvature falls back to steepest descent") {
        const auto s = solve_newton_system([](const Vector &x) { return Vector(-x); }, g, 1e-2, 20);
        CHECK(s.fallback);
        CHECK(s.direction == -g);
    }
    SUBCASE("zero gradient") {
        const auto s = solve_newton_system([](const Vector &x) { return x; }, Vector::Zero(5), 1e-2, 20);
        CHECK(s.direction.isZero(0.0));
        CHECK(s.iterations == 0);
    }
}

TEST_CASE("line search") {
    const Vector zero = Vector::Zero(1), one = Vector::Ones(1);
    SUBCASE("quadratic with minimizer at full length") {
        const auto ls = line_search([](const Vector &x) { return (x[0] - 1) * (x[0] - 1); }, zero, one, 1.0, 12);
        CHECK(ls.accepted);
        CHECK(ls.length == 1.0);
        CHECK(ls.trials == 1);
    }
    SUBCASE("overshooting step is halved") {
        const auto ls = line_search([](const Vector &x) { return (x[0] - 1) * (x[0] - 1); }, zero,
                                    Vector::Constant(1, 5.0), 1.0, 12);
        CHECK(ls.accepted);
        CHECK(ls.length == 0.25);
        CHECK(ls.trials == 3);
    }
    SUBCASE("ascent direction fails after exactly the allowed trials") {
        int calls = 0;
        const auto ls = line_search([&](const Vector &x) { ++calls; return x[0]; }, zero, one, 0.0, 7);
        CHECK_FALSE(ls.accepted);
        CHECK(ls.trials == 7);
        CHECK(calls == 7);
    }
    SUBCASE("armijo demands sufficient decrease") {
        const auto f = [](const Vector &x) { return (x[0] - 1) * (x[0] - 1); };
        const double slope = -2.0;  // f'(0) along +1
        const auto loose = line_search(f, zero, Vector::Constant(1, 1.9), 1.0, 12, &slope, 1e-4);
        CHECK(loose.length == 1.0);
        const auto strict = line_search(f, zero, Vector::Constant(1, 1.9), 1.0, 12, &slope, 0.5);
        CHECK(strict.length == 0.5);
    }
}

TEST_CASE("identity problem stops at zero controls") {
    std::mt19937_64 rng(2);
    Grid g({4, 4, 4}, {1, 1, 1});
    UromtConfig c = small_config(4, 3, 10);
    c.sigma = 0.0;
    const Vector rho0 = testing::uniform(rng, g.size(), 0.1, 1);
    const auto sol = gauss_newton(g, rho0, rho0, replicate_indicator(Vector::Ones(g.size()), 3), c);
    CHECK(sol.controls.packed().isZero(0.0));
    CHECK(sol.cost_trace.back().mismatch == 0.0);
    CHECK(sol.termination == Termination::GradientTolerance);
    CHECK(sol.iterations == 0);
}

TEST_CASE("translation pair") {
    const auto series = translation_series(12, 2, 5);
    Grid g({12, 12, 12}, {1, 1, 1});
    UromtConfig c = small_config(12, 5, 10);

    SUBCASE("cost drops by at least 90% within 10 iterations and decreases monotonically") {
        const auto sol = gauss_newton(g, series.images[0], series.images[1],
                                      replicate_indicator(Vector::Ones(g.size()), 5), c);
        CHECK(sol.cost_trace.back().total <= 0.1 * sol.cost_trace.front().total);
        CHECK(strictly_decreasing(sol.cost_trace));
        CHECK(sol.cost_trace.size() == static_cast<std::size_t>(sol.iterations) + 1);
        const auto chain = forward(g, sol.initial, sol.controls, replicate_indicator(Vector::Ones(g.size()), 5),
                                   DiffusionSolver(g, c.sigma, c.dt));
        for (std::size_t i = 0; i < chain.size(); ++i) CHECK(chain[i] == sol.interpolations[i]);
    }
    SUBCASE("masked source channel stays exactly zero") {
        const auto sol = gauss_newton(g, series.images[0], series.images[1],
                                      replicate_indicator(Vector::Zero(g.size()), 5), c);
        CHECK(sol.controls.sources().isZero(0.0));
        CHECK(sol.controls.velocities().cwiseAbs().maxCoeff() > 0.0);
        CHECK(testing::rel_diff(sol.final_density().sum(), series.images[0].sum()) < 1e-9);
    }
}

TEST_CASE("line-search failure ends the solve with the last accepted iterate") {
    const auto series = translation_series(8, 2, 3);
    Grid g({8, 8, 8}, {1, 1, 1});
    UromtConfig c = small_config(8, 3, 50);
    c.armijo = true;
    c.armijo_c = 0.3;
    c.ls_max_backtracks = 2;
    const auto chi = replicate_indicator(Vector::Ones(g.size()), 3);
    const auto sol = gauss_newton(g, series.images[0], series.images[1], chi, c);
    CHECK(sol.termination == Termination::LineSearchFailed);
    CHECK(sol.iterations > 0);
    CHECK(sol.iterations < 50);
    CHECK(strictly_decreasing(sol.cost_trace));
    const DiffusionSolver d(g, c.sigma, c.dt);
    const auto chain = forward(g, sol.initial, sol.controls, chi, d);
    const auto cost = evaluate_cost(chain, sol.controls, chi, series.images[1], g, c.dt, c.alpha, c.beta);
    CHECK(cost.total == sol.cost_trace.back().total);
}

TEST_CASE("invalid inputs") {
    Grid g({3, 3, 3}, {1, 1, 1});
    UromtConfig c = small_config(3, 2, 5);
    const auto chi = replicate_indicator(Vector::Ones(g.size()), 2);
    Vector rho = Vector::Ones(g.size());
    Vector negative = rho;
    negative[4] = -1.0;
    CHECK_THROWS_AS(gauss_newton(g, negative, rho, chi, c), InvalidArgument);
    CHECK_THROWS_AS(gauss_newton(g, rho, rho, replicate_indicator(Vector::Ones(g.size()), 3), c), InvalidArgument);
    Vector bad = rho;
    bad[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(gauss_newton(g, bad, rho, chi, c), NumericalFailure);
}

TEST_CASE("sequence") {
    const auto series = translation_series(8, 3, 3);
    Grid g({8, 8, 8}, {1, 1, 1});
    UromtConfig c = small_config(8, 3, 4);
    c.frames = 3;
    const std::vector<IndicatorSeries> chi(2, replicate_indicator(Vector::Ones(g.size()), 3));

    SUBCASE("two images reduce to one solve") {
        const auto r = run_sequence(g, {series.images[0], series.images[1]}, {chi[0]}, c);
        REQUIRE(r.loops.size() == 1);
        const auto direct = gauss_newton(g, series.images[0], series.images[1], chi[0], c);
        CHECK(r.loops[0].controls.packed() == direct.controls.packed());
        CHECK(r.input_digests.size() == 2);
    }
    SUBCASE("chaining from the last interpolation") {
        c.reuse_last_interp = true;
        const auto r = run_sequence(g, series.images, chi, c);
        REQUIRE(r.loops.size() == 2);
        CHECK(r.loops[1].initial == r.loops[0].final_density());
        c.reuse_last_interp = false;
        const auto fresh = run_sequence(g, series.images, chi, c);
        CHECK(fresh.loops[1].initial == series.images[1]);
    }
    SUBCASE("deterministic runs are bitwise identical") {
        std::vector<int> seen;
        const auto a = run_sequence(g, series.images, chi, c, [&](const IterationReport &rep) { seen.push_back(rep.loop); });
        const auto b = run_sequence(g, series.images, chi, c);
        for (std::size_t k = 0; k < a.loops.size(); ++k) {
            CHECK(a.loops[k].controls.packed() == b.loops[k].controls.packed());
            for (std::size_t j = 0; j < a.loops[k].interpolations.size(); ++j)
                CHECK(a.loops[k].interpolations[j] == b.loops[k].interpolations[j]);
        }
        REQUIRE_FALSE(seen.empty());
        CHECK(seen.front() == 1);
        CHECK(seen.back() == 2);
    }
    SUBCASE("a failing loop keeps the completed ones") {
        auto images = series.images;
        images[2][0] = -1.0;
        try {
            run_sequence(g, images, chi, c);
            FAIL("expected the sequence to abort");
        } catch (const SequenceAborted &e) {
            CHECK(e.partial().loops.size() == 1);
            CHECK(std::string(e.what()).find("loop 2") != std::string::npos);
        }
    }
}
