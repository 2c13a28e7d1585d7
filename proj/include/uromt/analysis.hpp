#pragma once

#include <array>
#include <vector>

#include "uromt/grid.hpp"
#include "uromt/solver.hpp"

namespace uromt {

using Point3 = std::array<double, 3>;

/// Per-voxel Euclidean norm of a 3n velocity field.
Vector speed_map(const Grid &grid, const Eigen::Ref<const Vector> &velocity);

struct EulerianMaps {
    int first_image = 0;  // N0
    int last_image = 0;   // N1
    /// speed[l][j] and source[l][j] for loop N0+1+l, sub-step j.
    std::vector<std::vector<Vector>> speed;
    std::vector<std::vector<Vector>> source;
    Vector mean_speed;
    Vector mean_source;
};

/// Eulerian speed and relative-source maps for loops N0+1 .. N1 (1-based loops,
/// i.e. between images N0 and N1) and their averages over the window's m*(N1-N0)
/// sub-steps.
EulerianMaps eulerian_maps(const Grid &grid, const std::vector<TransportSolution> &loops, int first_image,
                           int last_image);

struct PecletField {
    Vector value;
    /// True where the diffusive flux fell below the floor and the floor set the value.
    std::vector<bool> floored;
};

/// 1e-8 * max(rho) * max|v| / cbrt(dx*dy*dz).
double default_peclet_floor(const Grid &grid, const Vector &rho, const Eigen::Ref<const Vector> &velocity);

/// Central-difference gradient magnitude; boundary cells use the mirrored ghost value.
Vector gradient_magnitude(const Grid &grid, const Vector &rho);

/// Local Peclet number rho*|v| / (sigma*|grad rho| + floor). With sigma = 0 the
/// map is +infinity wherever rho*|v| > 0 and 0 elsewhere.
PecletField peclet(const Grid &grid, const Vector &rho, const Eigen::Ref<const Vector> &velocity, double sigma,
                   double floor);

struct Pathline {
    Point3 seed{};
    std::vector<Point3> points;
    std::vector<double> speed;
    std::vector<double> peclet;
    Point3 displacement{};
};

struct PathlineOptions {
    int substeps = 10;  // explicit Euler steps per dt
    double dt = 0.4;
    double sigma = 0.002;
    int threads = 0;    // 0: default_thread_count()
};

/// Seeds at voxel centers (physical coordinates) where rho >= threshold*max(rho),
/// keeping every `stride`-th voxel along each axis.
std::vector<Point3> select_seeds(const Grid &grid, const Vector &rho, double threshold = 0.1, int stride = 2);

/// Integrates dx/dt = v*(t, x) through every loop in order. Velocity is constant
/// over each sub-interval and interpolated trilinearly in space; positions are
/// clamped to the domain. Speed and Peclet number are sampled at every point from
/// the interval about to be traversed (the last interval for the final point);
/// the Peclet field of sub-step j uses rho_{j+1}. Output order follows `seeds`.
std::vector<Pathline> trace_pathlines(const Grid &grid, const std::vector<TransportSolution> &loops,
                                      const std::vector<Point3> &seeds, const PathlineOptions &options);

struct FluxVector {
    Point3 seed{};
    Point3 displacement{};
};

std::vector<FluxVector> flux_vectors(const std::vector<Pathline> &pathlines);

/// ||final - target||^2 / ||target||^2 * 100.
double nmse(const Vector &final_density, const Vector &target);
/// |sum(final) - sum(target)| / sum(target) * 100.
double pctm(const Vector &final_density, const Vector &target);

struct MetricsReport {
    std::vector<double> nmse;                  // per loop, percent
    std::vector<double> pctm;                  // per loop, percent
    std::vector<double> input_totals;          // sum of every input image
    std::vector<double> interpolation_totals;  // sum of each loop's rho_m
};

/// `images` are the q inputs; loop k (1-based) is compared against images[k].
MetricsReport metrics_report(const std::vector<Vector> &images, const std::vector<TransportSolution> &loops);

} // namespace uromt
