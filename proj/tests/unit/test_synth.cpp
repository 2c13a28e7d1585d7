#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "uromt/synth.hpp"

using namespace uromt;

namespace {

// A window on which voxel 4 of 9 sits exactly at coordinate 0.
GaussianSeriesSpec centered_spec() {
    GaussianSeriesSpec spec;
    spec.dims = {9, 9, 9};
    spec.window_lo = -4.5;
    spec.window_hi = 4.5;
    spec.center_step = 1.0;
    return spec;
}

double gaussian(const GaussianSeriesSpec &spec, const Grid &g, std::ptrdiff_t idx, double center) {
    const auto c = g.coords(idx);
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) d2 += std::pow(window_coordinate(spec, g.dim(a), c[a]) - center, 2);
    return spec.amplitude * std::exp(-0.5 * d2);
}

} // namespace

TEST_CASE("published constants") {
    GaussianSeriesSpec spec;
    CHECK(spec.amplitude == doctest::Approx(100.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-15));
    CHECK(spec.gain == std::vector<double>{0, 0.1, 0.2, 0.1, 0});
    CHECK(spec.radius == 1.5);
    CHECK(spec.smoothing_scale == doctest::Approx(std::sqrt(0.2)).epsilon(1e-15));
    CHECK(spec.frames == 5);
    CHECK(spec.dims == Index3{50, 50, 50});
}

TEST_CASE("window coordinates are cell centered") {
    GaussianSeriesSpec spec;
    CHECK(window_coordinate(spec, 50, 0) == doctest::Approx(-4.0 + 0.12));
    CHECK(window_coordinate(spec, 50, 49) == doctest::Approx(8.0 - 0.12));
    CHECK(window_coordinate(centered_spec(), 9, 4) == 0.0);
}

TEST_CASE("first frame peaks at the published amplitude") {
    const auto spec = centered_spec();
    const auto series = gaussian_sphere_series(spec);
    Grid g(spec.dims, {1, 1, 1});
    CHECK(series.images[0][g.index(4, 4, 4)] == doctest::Approx(39.894).epsilon(1e-5));
    CHECK(series.images[0].maxCoeff() == series.images[0][g.index(4, 4, 4)]);
}

TEST_CASE("frames without gain are smoothed pure gaussians") {
    GaussianSeriesSpec spec;
    spec.dims = {16, 16, 16};
    const auto series = gaussian_sphere_series(spec);
    Grid g(spec.dims, {1, 1, 1});
    Vector pure0(g.size()), pure4(g.size());
    for (std::ptrdiff_t i = 0; i < g.size(); ++i) {
        pure0[i] = gaussian(spec, g, i, 0.0);
        pure4[i] = gaussian(spec, g, i, 3.2);
    }
    CHECK((series.images[0] - pure0).cwiseAbs().maxCoeff() == 0.0);
    const Vector smoothed = gaussian_filter_3d(g, pure4, 5 * std::sqrt(0.2));
    CHECK((series.images[4] - smoothed).cwiseAbs().maxCoeff() <= 1e-12 * smoothed.maxCoeff());
}

TEST_CASE("gain frames carry more mass") {
    GaussianSeriesSpec spec;
    spec.dims = {24, 24, 24};
    const auto series = gaussian_sphere_series(spec);
    CHECK(series.images[2].sum() > series.images[0].sum());
    CHECK(series.images[1].sum() > series.images[0].sum());
    CHECK(series.images[4].sum() == doctest::Approx(series.images[0].sum()).epsilon(1e-3));
}

TEST_CASE("indicators translate along the diagonal") {
    GaussianSeriesSpec spec = centered_spec();
    spec.frames = 3;
    spec.steps = 4;
    spec.gain = {0, 0, 0};
    const auto series = gaussian_sphere_series(spec);
    Grid g(spec.dims, {1, 1, 1});
    REQUIRE(series.indicators.size() == 2);
    REQUIRE(series.indicators[0].size() == 4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 4; ++j) {
            const double center = i + j / 4.0;
            const auto &chi = series.indicators[i][j];
            CHECK(chi == ball_indicator(g, spec, center, 1.5));
            CHECK(chi.sum() > 0.0);
            for (std::ptrdiff_t idx = 0; idx < g.size(); ++idx) {
                const auto c = g.coords(idx);
                CHECK(chi[idx] == chi[g.index(c[1], c[2], c[0])]);
            }
        }
    CHECK(series.indicators[0][0][g.index(4, 4, 4)] == 1.0);
    CHECK(series.indicators[0][0][g.index(6, 4, 4)] == 0.0);  // distance 2 > 1.5
    CHECK(series.indicators[0][0][g.index(5, 4, 4)] == 1.0);
}

TEST_CASE("generation is deterministic") {
    GaussianSeriesSpec spec;
    spec.dims = {10, 10, 10};
    const auto a = gaussian_sphere_series(spec), b = gaussian_sphere_series(spec);
    for (std::size_t i = 0; i < a.images.size(); ++i) CHECK(a.images[i] == b.images[i]);
}

TEST_CASE("gaussian filter") {
    Grid g({15, 15, 15}, {1, 1, 1});
    const double sd = 1.3;
    Vector delta = Vector::Zero(g.size());
    delta[g.index(7, 7, 7)] = 1.0;
    const Vector out = gaussian_filter_3d(g, delta, sd);

    SUBCASE("impulse response is the normalized discrete kernel") {
        const int half = 3;  // ceil(2 * 1.3)
        double norm = 0.0;
        for (int t = -half; t <= half; ++t) norm += std::exp(-0.5 * t * t / (sd * sd));
        for (int dz = -4; dz <= 4; ++dz)
            for (int dy = -4; dy <= 4; ++dy)
                for (int dx = -4; dx <= 4; ++dx) {
                    const bool inside = std::abs(dx) <= half && std::abs(dy) <= half && std::abs(dz) <= half;
                    const double expected =
                        inside ? std::exp(-0.5 * (dx * dx + dy * dy + dz * dz) / (sd * sd)) / (norm * norm * norm) : 0.0;
                    CHECK(out[g.index(7 + dx, 7 + dy, 7 + dz)] == doctest::Approx(expected).epsilon(1e-13));
                }
    }
    SUBCASE("interior-supported mass is preserved and peaks drop") {
        CHECK(out.sum() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(out.maxCoeff() < 1.0);
    }
    SUBCASE("edges are replicated") {
        const Vector ones = gaussian_filter_3d(g, Vector::Ones(g.size()), 2.0);
        CHECK((ones.array() - 1.0).abs().maxCoeff() < 1e-14);
    }
}
