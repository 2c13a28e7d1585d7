#include "uromt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "uromt/parallel.hpp"

namespace uromt {

Vector speed_map(const Grid &grid, const Eigen::Ref<const Vector> &velocity) {
    const auto n = grid.size();
    if (velocity.size() != 3 * n) throw InvalidArgument("speed map: velocity field must have 3n entries");
    return (velocity.segment(0, n).cwiseAbs2() + velocity.segment(n, n).cwiseAbs2() +
            velocity.segment(2 * n, n).cwiseAbs2())
        .cwiseSqrt();
}

EulerianMaps eulerian_maps(const Grid &grid, const std::vector<TransportSolution> &loops, int first_image,
                           int last_image) {
    if (first_image < 0 || last_image <= first_image || last_image > static_cast<int>(loops.size()))
        throw InvalidArgument("eulerian maps: window [" + std::to_string(first_image) + ", " +
                              std::to_string(last_image) + "] is empty or outside 0.." +
                              std::to_string(loops.size()));
    EulerianMaps maps;
    maps.first_image = first_image;
    maps.last_image = last_image;
    maps.mean_speed = Vector::Zero(grid.size());
    maps.mean_source = Vector::Zero(grid.size());
    std::size_t count = 0;
    for (int k = first_image; k < last_image; ++k) {
        const auto &loop = loops[static_cast<std::size_t>(k)];
        if (loop.controls.voxels() != grid.size()) throw InvalidArgument("eulerian maps: solution grid mismatch");
        auto &speeds = maps.speed.emplace_back();
        auto &sources = maps.source.emplace_back();
        for (int j = 0; j < loop.controls.steps(); ++j) {
            speeds.push_back(speed_map(grid, loop.controls.velocity(j)));
            sources.push_back(loop.controls.source(j));
            maps.mean_speed += speeds.back();
            maps.mean_source += sources.back();
            ++count;
        }
    }
    maps.mean_speed /= static_cast<double>(count);
    maps.mean_source /= static_cast<double>(count);
    return maps;
}

double default_peclet_floor(const Grid &grid, const Vector &rho, const Eigen::Ref<const Vector> &velocity) {
    if (rho.size() == 0) return 0.0;
    const double vmax = speed_map(grid, velocity).maxCoeff();
    return 1e-8 * std::max(0.0, rho.maxCoeff()) * vmax / std::cbrt(grid.voxel_volume());
}

Vector gradient_magnitude(const Grid &grid, const Vector &rho) {
    const auto n = grid.size();
    if (rho.size() != n) throw InvalidArgument("gradient: density has wrong length");
    const std::array<std::ptrdiff_t, 3> stride{1, grid.dim(0), grid.dim(0) * grid.dim(1)};
    Vector out(n);
    for (std::ptrdiff_t idx = 0; idx < n; ++idx) {
        const Index3 c = grid.coords(idx);
        double g2 = 0.0;
        for (int a = 0; a < 3; ++a) {
            const double lo = c[a] > 0 ? rho[idx - stride[a]] : rho[idx];
            const double hi = c[a] + 1 < grid.dim(a) ? rho[idx + stride[a]] : rho[idx];
            const double d = (hi - lo) / (2.0 * grid.spacing(a));
            g2 += d * d;
        }
        out[idx] = std::sqrt(g2);
    }
    return out;
}

PecletField peclet(const Grid &grid, const Vector &rho, const Eigen::Ref<const Vector> &velocity, double sigma,
                   double floor) {
    if (sigma < 0.0) throw InvalidArgument("peclet: sigma must be non-negative");
    const auto n = grid.size();
    const Vector advective = rho.cwiseProduct(speed_map(grid, velocity)).cwiseAbs();
    PecletField pe{Vector::Zero(n), std::vector<bool>(static_cast<std::size_t>(n), false)};
    if (sigma == 0.0) {
        for (std::ptrdiff_t i = 0; i < n; ++i)
            if (advective[i] > 0.0) pe.value[i] = std::numeric_limits<double>::infinity();
        return pe;
    }
    const Vector grad = gradient_magnitude(grid, rho);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (advective[i] == 0.0) continue;
        const double diffusive = sigma * grad[i];
        pe.floored[static_cast<std::size_t>(i)] = diffusive < floor;
        const double denom = diffusive + floor;
        pe.value[i] = denom > 0.0 ? advective[i] / denom : std::numeric_limits<double>::infinity();
    }
    return pe;
}

std::vector<Point3> select_seeds(const Grid &grid, const Vector &rho, double threshold, int stride) {
    if (rho.size() != grid.size()) throw InvalidArgument("seeds: density has wrong length");
    if (stride < 1) throw InvalidArgument("seeds: stride must be at least 1");
    std::vector<Point3> seeds;
    const double cut = threshold * rho.maxCoeff();
    for (std::ptrdiff_t k = 0; k < grid.dim(2); k += stride)
        for (std::ptrdiff_t j = 0; j < grid.dim(1); j += stride)
            for (std::ptrdiff_t i = 0; i < grid.dim(0); i += stride)
                if (rho[grid.index(i, j, k)] >= cut && rho[grid.index(i, j, k)] > 0.0)
                    seeds.push_back({static_cast<double>(i) * grid.spacing(0), static_cast<double>(j) * grid.spacing(1),
                                     static_cast<double>(k) * grid.spacing(2)});
    return seeds;
}

namespace {

struct Stencil {
    std::array<std::ptrdiff_t, 8> index{};
    std::array<double, 8> weight{};
    int count = 0;
};

Point3 clamp_to_domain(const Grid &grid, Point3 x) {
    for (int a = 0; a < 3; ++a)
        x[a] = std::clamp(x[a], 0.0, static_cast<double>(grid.dim(a) - 1) * grid.spacing(a));
    return x;
}

Stencil trilinear(const Grid &grid, const Point3 &x) {
    std::array<std::ptrdiff_t, 3> lo{};
    std::array<double, 3> f{};
    for (int a = 0; a < 3; ++a) {
        const auto extent = grid.dim(a);
        const double u = std::clamp(x[a] / grid.spacing(a), 0.0, static_cast<double>(extent - 1));
        if (extent == 1) {
            lo[a] = 0;
            f[a] = 0.0;
            continue;
        }
        lo[a] = std::min(static_cast<std::ptrdiff_t>(std::floor(u)), extent - 2);
        f[a] = u - static_cast<double>(lo[a]);
    }
    Stencil s;
    for (int c = 0; c < 8; ++c) {
        double w = 1.0;
        std::array<std::ptrdiff_t, 3> node{};
        for (int a = 0; a < 3; ++a) {
            const int bit = (c >> a) & 1;
            w *= bit ? f[a] : 1.0 - f[a];
            node[a] = lo[a] + bit;
        }
        if (w == 0.0) continue;
        s.index[s.count] = grid.index(node[0], node[1], node[2]);
        s.weight[s.count] = w;
        ++s.count;
    }
    return s;
}

double sample(const Stencil &s, const Vector &field, std::ptrdiff_t offset = 0) {
    double v = 0.0;
    for (int c = 0; c < s.count; ++c) v += s.weight[c] * field[offset + s.index[c]];
    return v;
}

} // namespace

std::vector<Pathline> trace_pathlines(const Grid &grid, const std::vector<TransportSolution> &loops,
                                      const std::vector<Point3> &seeds, const PathlineOptions &options) {
    if (options.substeps < 1) throw InvalidArgument("pathlines: substeps must be at least 1");
    if (!(options.dt > 0.0)) throw InvalidArgument("pathlines: dt must be positive");
    const auto n = grid.size();

    std::vector<Vector> velocity;
    std::vector<Vector> pe_fields;
    for (const auto &loop : loops) {
        if (loop.controls.voxels() != n) throw InvalidArgument("pathlines: solution grid mismatch");
        for (int j = 0; j < loop.controls.steps(); ++j) {
            velocity.emplace_back(loop.controls.velocity(j));
            const Vector &rho = loop.interpolations[static_cast<std::size_t>(j)];
            const double floor = default_peclet_floor(grid, rho, loop.controls.velocity(j));
            pe_fields.push_back(peclet(grid, rho, loop.controls.velocity(j), options.sigma, floor).value);
        }
    }

    for (const auto &s : seeds)
        for (int a = 0; a < 3; ++a)
            if (s[a] < 0.0 || s[a] > static_cast<double>(grid.dim(a) - 1) * grid.spacing(a))
                throw InvalidArgument("pathlines: seed outside the domain");

    const double h = options.dt / options.substeps;
    std::vector<Pathline> lines(seeds.size());
    const int threads = options.threads > 0 ? options.threads : default_thread_count();
    parallel_for(seeds.size(), threads, [&](std::size_t s) {
        Pathline &line = lines[s];
        line.seed = seeds[s];
        Point3 x = seeds[s];
        const std::size_t intervals = velocity.size();
        line.points.reserve(intervals * static_cast<std::size_t>(options.substeps) + 1);

        const auto record = [&](std::size_t interval) {
            const Stencil st = trilinear(grid, x);
            const Vector &v = velocity[interval];
            const double vx = sample(st, v, 0), vy = sample(st, v, n), vz = sample(st, v, 2 * n);
            line.points.push_back(x);
            line.speed.push_back(std::sqrt(vx * vx + vy * vy + vz * vz));
            line.peclet.push_back(sample(st, pe_fields[interval]));
            return Point3{vx, vy, vz};
        };

        if (intervals == 0) {
            line.points.push_back(x);
            line.speed.push_back(0.0);
            line.peclet.push_back(0.0);
        }
        for (std::size_t interval = 0; interval < intervals; ++interval) {
            for (int sub = 0; sub < options.substeps; ++sub) {
                const Point3 v = record(interval);
                x = clamp_to_domain(grid, {x[0] + h * v[0], x[1] + h * v[1], x[2] + h * v[2]});
            }
        }
        if (intervals > 0) record(intervals - 1);
        for (int a = 0; a < 3; ++a) line.displacement[a] = line.points.back()[a] - line.seed[a];
    });
    return lines;
}

std::vector<FluxVector> flux_vectors(const std::vector<Pathline> &pathlines) {
    std::vector<FluxVector> out;
    out.reserve(pathlines.size());
    for (const auto &p : pathlines) {
        FluxVector f;
        f.seed = p.points.front();
        for (int a = 0; a < 3; ++a) f.displacement[a] = p.points.back()[a] - p.points.front()[a];
        out.push_back(f);
    }
    return out;
}

double nmse(const Vector &final_density, const Vector &target) {
    if (final_density.size() != target.size()) throw InvalidArgument("nmse: field lengths differ");
    const double denom = target.squaredNorm();
    if (denom == 0.0) throw UndefinedMetric("nmse: target image is identically zero");
    return 100.0 * (final_density - target).squaredNorm() / denom;
}

double pctm(const Vector &final_density, const Vector &target) {
    if (final_density.size() != target.size()) throw InvalidArgument("pctm: field lengths differ");
    const double denom = target.sum();
    if (denom == 0.0) throw UndefinedMetric("pctm: target image has zero total mass");
    return 100.0 * std::abs(final_density.sum() - denom) / std::abs(denom);
}

MetricsReport metrics_report(const std::vector<Vector> &images, const std::vector<TransportSolution> &loops) {
    if (loops.size() + 1 > images.size()) throw InvalidArgument("metrics: more loops than image pairs");
    MetricsReport report;
    for (const auto &img : images) report.input_totals.push_back(img.sum());
    for (std::size_t k = 0; k < loops.size(); ++k) {
        const Vector &final_density = loops[k].final_density();
        report.nmse.push_back(nmse(final_density, images[k + 1]));
        report.pctm.push_back(pctm(final_density, images[k + 1]));
        report.interpolation_totals.push_back(final_density.sum());
    }
    return report;
}

} // namespace uromt
