#include "uromt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uromt/error.hpp"

namespace uromt {

double window_coordinate(const GaussianSeriesSpec &spec, std::ptrdiff_t extent, std::ptrdiff_t i) {
    const double h = (spec.window_hi - spec.window_lo) / static_cast<double>(extent);
    return spec.window_lo + (static_cast<double>(i) + 0.5) * h;
}

Vector ball_indicator(const Grid &grid, const GaussianSeriesSpec &spec, double center, double radius) {
    Vector chi(grid.size());
    const double r2 = radius * radius;
    for (std::ptrdiff_t idx = 0; idx < grid.size(); ++idx) {
        const Index3 c = grid.coords(idx);
        double d2 = 0.0;
        for (int a = 0; a < 3; ++a) {
            const double d = window_coordinate(spec, grid.dim(a), c[a]) - center;
            d2 += d * d;
        }
        chi[idx] = d2 <= r2 ? 1.0 : 0.0;
    }
    return chi;
}

GaussianSeries gaussian_sphere_series(const GaussianSeriesSpec &spec) {
    if (spec.frames < 1) throw InvalidArgument("gaussian series: need at least one frame");
    if (spec.steps < 1) throw InvalidArgument("gaussian series: steps must be positive");
    if (static_cast<int>(spec.gain.size()) < spec.frames)
        throw InvalidArgument("gaussian series: need one gain coefficient per frame");
    if (!(spec.window_hi > spec.window_lo)) throw InvalidArgument("gaussian series: empty window");
    const Grid grid(spec.dims, {1.0, 1.0, 1.0});

    GaussianSeries out;
    for (int i = 0; i < spec.frames; ++i) {
        const double center = spec.center_step * i;
        const Vector chi = ball_indicator(grid, spec, center, spec.radius);
        Vector img(grid.size());
        for (std::ptrdiff_t idx = 0; idx < grid.size(); ++idx) {
            const Index3 c = grid.coords(idx);
            double d2 = 0.0;
            for (int a = 0; a < 3; ++a) {
                const double d = window_coordinate(spec, grid.dim(a), c[a]) - center;
                d2 += d * d;
            }
            img[idx] = (1.0 + spec.gain[static_cast<std::size_t>(i)] * chi[idx]) * spec.amplitude * std::exp(-0.5 * d2);
        }
        if (i >= 1) img = gaussian_filter_3d(grid, img, (i + 1) * spec.smoothing_scale);
        out.images.push_back(std::move(img));
    }

    for (int i = 0; i + 1 < spec.frames; ++i) {
        IndicatorSeries series;
        for (int j = 0; j < spec.steps; ++j) {
            const double center = spec.center_step * (i + static_cast<double>(j) / spec.steps);
            series.push_back(ball_indicator(grid, spec, center, spec.radius));
        }
        out.indicators.push_back(std::move(series));
    }
    return out;
}

Vector gaussian_filter_3d(const Grid &grid, const Vector &field, double std_dev) {
    if (!(std_dev > 0.0)) throw InvalidArgument("gaussian filter: std-dev must be positive");
    if (field.size() != grid.size()) throw InvalidArgument("gaussian filter: field has wrong length");

    const auto half = static_cast<std::ptrdiff_t>(std::ceil(2.0 * std_dev));
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    double total = 0.0;
    for (std::ptrdiff_t t = -half; t <= half; ++t) {
        const double w = std::exp(-0.5 * static_cast<double>(t * t) / (std_dev * std_dev));
        kernel[static_cast<std::size_t>(t + half)] = w;
        total += w;
    }
    for (double &w : kernel) w /= total;

    const std::array<std::ptrdiff_t, 3> stride{1, grid.dim(0), grid.dim(0) * grid.dim(1)};
    Vector current = field;
    Vector next(field.size());
    for (int a = 0; a < 3; ++a) {
        const auto extent = grid.dim(a);
        for (std::ptrdiff_t idx = 0; idx < grid.size(); ++idx) {
            const auto c = grid.coords(idx)[a];
            const std::ptrdiff_t base = idx - c * stride[a];
            double acc = 0.0;
            for (std::ptrdiff_t t = -half; t <= half; ++t) {
                const auto src = std::clamp<std::ptrdiff_t>(c + t, 0, extent - 1);
                acc += kernel[static_cast<std::size_t>(t + half)] * current[base + src * stride[a]];
            }
            next[idx] = acc;
        }
        std::swap(current, next);
    }
    return current;
}

} // namespace uromt
