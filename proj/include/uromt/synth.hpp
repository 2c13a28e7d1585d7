#pragma once

#include <array>
#include <vector>

#include "uromt/grid.hpp"
#include "uromt/transport.hpp"

namespace uromt {

/// Moving, mass-gaining Gaussian sphere benchmark.
///
/// Frame i samples (1 + gain[i]*ball_i(x)) * G_i(x), where G_i is an isotropic
/// unit-variance Gaussian of peak `amplitude` centered at center_step*i on every
/// axis and ball_i is the radius-`radius` ball around that center. Frames i >= 1
/// are then smoothed with a Gaussian filter of std-dev (i+1)*sqrt(0.2) voxels.
/// The continuous coordinates [window_lo, window_hi] on every axis are mapped
/// cell-centered onto the grid.
struct GaussianSeriesSpec {
    Index3 dims{50, 50, 50};
    int frames = 5;
    int steps = 10;  // indicators per pair
    double center_step = 0.8;
    double amplitude = 39.894228040143268;  // 100 / sqrt(2*pi)
    std::vector<double> gain{0.0, 0.1, 0.2, 0.1, 0.0};
    double radius = 1.5;
    double smoothing_scale = 0.44721359549995793;  // sqrt(0.2)
    double window_lo = -4.0;
    double window_hi = 8.0;
};

struct GaussianSeries {
    std::vector<Vector> images;
    /// indicators[i][j]: ball centered at center_step*(i + j/m), for pair (i, i+1).
    std::vector<IndicatorSeries> indicators;
};

/// Continuous coordinate of voxel index `i` along an axis of `extent` voxels.
double window_coordinate(const GaussianSeriesSpec &spec, std::ptrdiff_t extent, std::ptrdiff_t i);

/// 0/1 ball of the given radius around (c, c, c) in window coordinates.
Vector ball_indicator(const Grid &grid, const GaussianSeriesSpec &spec, double center, double radius);

GaussianSeries gaussian_sphere_series(const GaussianSeriesSpec &spec);

/// Separable Gaussian smoothing: kernel half-width ceil(2*std_dev) voxels,
/// normalized to sum 1, replicated edges.
Vector gaussian_filter_3d(const Grid &grid, const Vector &field, double std_dev);

} // namespace uromt
