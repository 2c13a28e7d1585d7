#include "uromt/sensitivity.hpp"

#include <cstring>
#include <string>

#include "uromt/error.hpp"

namespace uromt {

SparseMatrix build_advection_jacobian(const Grid &grid, const Eigen::Ref<const Vector> &velocity, double dt,
                                      const Vector &mass) {
    const auto n = grid.size();
    if (velocity.size() != 3 * n || mass.size() != n)
        throw InvalidArgument("advection Jacobian: field lengths do not match the grid");

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(24 * n));
    std::array<Deposition1D, 3> dep;
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        if (mass[k] == 0.0) continue;
        const Index3 c = grid.coords(k);
        for (int a = 0; a < 3; ++a)
            dep[a] = deposit_1d(c[a], dt * velocity[a * n + k] / grid.spacing(a), grid.dim(a));

        for (int axis = 0; axis < 3; ++axis) {
            const double scale = mass[k] * dt / grid.spacing(axis);
            const std::ptrdiff_t col = axis * n + k;
            for (int a = 0; a < dep[0].count; ++a) {
                const double fa = axis == 0 ? dep[0].slope[a] : dep[0].weight[a];
                if (fa == 0.0) continue;
                for (int b = 0; b < dep[1].count; ++b) {
                    const double fb = axis == 1 ? dep[1].slope[b] : dep[1].weight[b];
                    if (fb == 0.0) continue;
                    for (int e = 0; e < dep[2].count; ++e) {
                        const double fe = axis == 2 ? dep[2].slope[e] : dep[2].weight[e];
                        if (fe == 0.0) continue;
                        entries.emplace_back(grid.index(dep[0].node[a], dep[1].node[b], dep[2].node[e]), col,
                                             scale * fa * fb * fe);
                    }
                }
            }
        }
    }
    SparseMatrix B(n, 3 * n);
    B.setFromTriplets(entries.begin(), entries.end());
    return B;
}

std::uint64_t controls_fingerprint(const Vector &rho0, const Controls &controls) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto mix = [&h](const Vector &v) {
        const auto *bytes = reinterpret_cast<const unsigned char *>(v.data());
        for (std::size_t i = 0; i < static_cast<std::size_t>(v.size()) * sizeof(double); ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    };
    mix(rho0);
    mix(controls.packed());
    return h;
}

LinearizationCache LinearizationCache::build(const Grid &grid, const Vector &rho0, const Controls &controls,
                                             const IndicatorSeries &chi,
                                             std::shared_ptr<const DiffusionSolver> diffusion) {
    if (!diffusion) throw InvalidArgument("linearization cache needs a diffusion solver");
    if (rho0.size() != grid.size() || controls.voxels() != grid.size())
        throw InvalidArgument("linearization cache: inputs do not match the grid");
    const int m = controls.steps();
    if (static_cast<int>(chi.size()) != m) throw InvalidArgument("linearization cache: need one indicator per sub-step");

    LinearizationCache cache(grid, controls);
    cache.chi_ = chi;
    cache.diffusion_ = std::move(diffusion);
    cache.fingerprint_ = controls_fingerprint(rho0, controls);

    const double dt = cache.diffusion_->dt();
    cache.densities_.reserve(static_cast<std::size_t>(m + 1));
    cache.densities_.push_back(rho0);
    for (int i = 0; i < m; ++i) {
        const Vector &rho = cache.densities_.back();
        Vector scale = (1.0 + dt * controls.source(i).array() * chi[i].array()).matrix();
        const Vector src = scale.cwiseProduct(rho);
        SparseMatrix S = build_pic_matrix(grid, controls.velocity(i), dt);

        cache.adv_jac_.push_back(build_advection_jacobian(grid, controls.velocity(i), dt, src));
        cache.rho_chi_.push_back(rho.cwiseProduct(chi[i]));
        Vector next = cache.diffusion_->solve(S * src);
        cache.pic_.push_back(std::move(S));
        cache.scale_.push_back(std::move(scale));
        cache.densities_.push_back(std::move(next));
    }
    return cache;
}

void require_fresh(const LinearizationCache &cache, const Vector &rho0, const Controls &controls) {
    if (cache.fingerprint() != controls_fingerprint(rho0, controls))
        throw StaleCacheError("linearization cache was built for different controls (version " +
                              std::to_string(cache.fingerprint()) + ")");
}

namespace {

void check_direction(const LinearizationCache &cache, const Vector &x) {
    const auto expected = 4 * cache.grid().size() * cache.steps();
    if (x.size() != expected)
        throw InvalidArgument("direction must have 4*n*m = " + std::to_string(expected) + " entries, got " +
                              std::to_string(x.size()));
}

} // namespace

std::vector<Vector> jacobian_apply(const LinearizationCache &cache, const Vector &direction) {
    check_direction(cache, direction);
    const auto n = cache.grid().size();
    const int m = cache.steps();
    const Controls dir(n, m, direction);
    const double dt = cache.dt();

    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(m));
    Vector delta = Vector::Zero(n);
    for (int i = 0; i < m; ++i) {
        const Vector pre = cache.source_scale(i).cwiseProduct(delta) +
                           dt * cache.masked_density(i).cwiseProduct(dir.source(i));
        const Vector rhs = cache.pic(i) * pre + cache.advection_jacobian(i) * dir.velocity(i);
        delta = cache.diffusion().solve(rhs);
        out.push_back(delta);
    }
    return out;
}

Vector final_jacobian_apply(const LinearizationCache &cache, const Vector &direction) {
    return jacobian_apply(cache, direction).back();
}

Vector jacobian_transpose_apply(const LinearizationCache &cache, const std::vector<Vector> &seeds) {
    const auto n = cache.grid().size();
    const int m = cache.steps();
    if (static_cast<int>(seeds.size()) != m) throw InvalidArgument("need one adjoint seed per density in the chain");
    for (const auto &w : seeds)
        if (w.size() != n) throw InvalidArgument("adjoint seed has wrong length");

    const double dt = cache.dt();
    Controls out(n, m);
    Vector lambda = seeds.back();
    for (int i = m - 1; i >= 0; --i) {
        const Vector mu = cache.diffusion().solve(lambda);
        out.velocity(i) = cache.advection_jacobian(i).transpose() * mu;
        const Vector t = cache.pic(i).transpose() * mu;
        out.source(i) = dt * cache.masked_density(i).cwiseProduct(t);
        if (i > 0) lambda = seeds[static_cast<std::size_t>(i - 1)] + cache.source_scale(i).cwiseProduct(t);
    }
    return std::move(out.packed());
}

Vector final_jacobian_transpose_apply(const LinearizationCache &cache, const Vector &y) {
    std::vector<Vector> seeds(static_cast<std::size_t>(cache.steps()), Vector::Zero(cache.grid().size()));
    seeds.back() = y;
    return jacobian_transpose_apply(cache, seeds);
}

Vector gradient(const LinearizationCache &cache, const CostWeights &weights, const Vector &target) {
    const auto n = cache.grid().size();
    const int m = cache.steps();
    if (target.size() != n) throw InvalidArgument("target image has wrong length");
    const double h3 = cache.grid().voxel_volume();
    const double c = cache.dt() * h3;
    const Controls &x = cache.controls();

    std::vector<Vector> seeds;
    seeds.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const auto v = x.velocity(i);
        const auto r = x.source(i);
        const Vector speed2 = v.segment(0, n).cwiseAbs2() + v.segment(n, n).cwiseAbs2() + v.segment(2 * n, n).cwiseAbs2();
        seeds.push_back(c * (weights.kinetic * speed2 + weights.alpha * r.cwiseAbs2().cwiseProduct(cache.indicators()[i])));
    }
    seeds.back() += 2.0 * weights.beta * h3 * (cache.density(m) - target);

    Controls g(n, m, jacobian_transpose_apply(cache, seeds));
    for (int i = 0; i < m; ++i) {
        const Vector &rho = cache.density(i + 1);
        auto gv = g.velocity(i);
        const auto v = x.velocity(i);
        for (int a = 0; a < 3; ++a)
            gv.segment(a * n, n) += 2.0 * c * weights.kinetic * rho.cwiseProduct(v.segment(a * n, n));
        g.source(i) += 2.0 * c * weights.alpha *
                       x.source(i).cwiseProduct(cache.indicators()[i]).cwiseProduct(rho);
    }
    return std::move(g.packed());
}

Vector gradient(const LinearizationCache &cache, double alpha, double beta, const Vector &target) {
    return gradient(cache, CostWeights{1.0, alpha, beta}, target);
}

Vector hessian_apply(const LinearizationCache &cache, const Vector &x, const CostWeights &weights) {
    check_direction(cache, x);
    const auto n = cache.grid().size();
    const int m = cache.steps();
    const double h3 = cache.grid().voxel_volume();
    const double c = cache.dt() * h3;

    Controls hx(n, m);
    if (weights.beta != 0.0) hx.packed() = (2.0 * weights.beta * h3) *
                                          final_jacobian_transpose_apply(cache, final_jacobian_apply(cache, x));

    const Controls in(n, m, x);
    for (int i = 0; i < m; ++i) {
        const Vector &rho = cache.density(i + 1);
        auto hv = hx.velocity(i);
        const auto xv = in.velocity(i);
        for (int a = 0; a < 3; ++a)
            hv.segment(a * n, n) += 2.0 * c * weights.kinetic * rho.cwiseProduct(xv.segment(a * n, n));
        hx.source(i) += 2.0 * c * weights.alpha *
                        rho.cwiseProduct(cache.indicators()[i]).cwiseProduct(in.source(i));
    }
    return std::move(hx.packed());
}

Vector hessian_apply(const LinearizationCache &cache, const Vector &x, double alpha, double beta) {
    return hessian_apply(cache, x, CostWeights{1.0, alpha, beta});
}

} // namespace uromt
