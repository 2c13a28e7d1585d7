#include "uromt/transport.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uromt/error.hpp"

namespace uromt {

Controls::Controls(std::ptrdiff_t voxels, int steps) : Controls(voxels, steps, Vector::Zero(4 * voxels * steps)) {}

Controls::Controls(std::ptrdiff_t voxels, int steps, Vector packed) : n_(voxels), m_(steps), data_(std::move(packed)) {
    if (voxels <= 0 || steps <= 0) throw InvalidArgument("controls need a positive voxel and step count");
    if (data_.size() != 4 * n_ * m_)
        throw InvalidArgument("packed controls must have 4*n*m = " + std::to_string(4 * n_ * m_) + " entries, got " +
                              std::to_string(data_.size()));
}

void validate_indicator(const Vector &chi) {
    for (Eigen::Index i = 0; i < chi.size(); ++i)
        if (chi[i] != 0.0 && chi[i] != 1.0)
            throw InvalidArgument("indicator entry " + std::to_string(i) + " is neither 0 nor 1");
}

IndicatorSeries replicate_indicator(const Vector &chi, int steps) {
    validate_indicator(chi);
    return IndicatorSeries(static_cast<std::size_t>(steps), chi);
}

Deposition1D deposit_1d(std::ptrdiff_t center, double shift, std::ptrdiff_t extent) {
    Deposition1D d;
    const auto single = [&d](std::ptrdiff_t node) {
        d.node[0] = node;
        d.weight[0] = 1.0;
        d.count = 1;
        return d;
    };
    if (extent == 1) return single(0);

    const double last = static_cast<double>(extent - 1);
    const double p = static_cast<double>(center) + shift;
    if (p < 0.0) return single(0);
    if (p > last) return single(extent - 1);

    const auto i0 = std::min(static_cast<std::ptrdiff_t>(std::floor(p)), extent - 2);
    const double f = p - static_cast<double>(i0);

    if (f == 0.0 && i0 > 0) {
        d.node = {i0 - 1, i0, i0 + 1};
        d.weight = {0.0, 1.0, 0.0};
        d.slope = {-0.5, 0.0, 0.5};
        d.count = 3;
        return d;
    }
    d.node = {i0, i0 + 1, 0};
    d.weight = {1.0 - f, f, 0.0};
    d.count = 2;
    // On the first or last node one side is clamped (zero slope).
    d.slope = (f == 0.0 || f == 1.0) ? std::array<double, 3>{-0.5, 0.5, 0.0} : std::array<double, 3>{-1.0, 1.0, 0.0};
    return d;
}

Vector apply_source(const Vector &rho, const Eigen::Ref<const Vector> &source, const Vector &chi, double dt,
                    StepDiagnostics *diagnostics) {
    if (source.size() != rho.size() || chi.size() != rho.size())
        throw InvalidArgument("apply_source: field lengths differ");
    const Vector factor = (1.0 + dt * source.array() * chi.array()).matrix();
    if (diagnostics) diagnostics->negative_source_voxels += static_cast<std::size_t>((factor.array() < 0.0).count());
    return factor.cwiseProduct(rho);
}

SparseMatrix build_pic_matrix(const Grid &grid, const Eigen::Ref<const Vector> &velocity, double dt) {
    const auto n = grid.size();
    if (velocity.size() != 3 * n) throw InvalidArgument("velocity field must have 3n entries");

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(8 * n));
    std::array<Deposition1D, 3> dep;
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const Index3 c = grid.coords(k);
        for (int a = 0; a < 3; ++a)
            dep[a] = deposit_1d(c[a], dt * velocity[a * n + k] / grid.spacing(a), grid.dim(a));
        for (int a = 0; a < dep[0].count; ++a) {
            for (int b = 0; b < dep[1].count; ++b) {
                const double wab = dep[0].weight[a] * dep[1].weight[b];
                if (wab == 0.0) continue;
                for (int e = 0; e < dep[2].count; ++e) {
                    const double w = wab * dep[2].weight[e];
                    if (w == 0.0) continue;
                    entries.emplace_back(grid.index(dep[0].node[a], dep[1].node[b], dep[2].node[e]), k, w);
                }
            }
        }
    }
    SparseMatrix S(n, n);
    S.setFromTriplets(entries.begin(), entries.end());
    return S;
}

Vector apply_advection(const Grid &grid, const Vector &rho, const Eigen::Ref<const Vector> &velocity, double dt) {
    if (rho.size() != grid.size()) throw InvalidArgument("apply_advection: density has wrong length");
    return build_pic_matrix(grid, velocity, dt) * rho;
}

Vector step(const Grid &grid, const Vector &rho, const Eigen::Ref<const Vector> &velocity,
            const Eigen::Ref<const Vector> &source, const Vector &chi, const DiffusionSolver &diffusion,
            StepDiagnostics *diagnostics) {
    if (rho.size() != grid.size()) throw InvalidArgument("step: density has wrong length");
    const double dt = diffusion.dt();
    const Vector src = apply_source(rho, source, chi, dt, diagnostics);
    return diffusion.solve(build_pic_matrix(grid, velocity, dt) * src);
}

std::vector<Vector> forward(const Grid &grid, const Vector &rho0, const Controls &controls,
                            const IndicatorSeries &chi, const DiffusionSolver &diffusion,
                            StepDiagnostics *diagnostics) {
    const int m = controls.steps();
    if (controls.voxels() != grid.size()) throw InvalidArgument("forward: controls do not match the grid");
    if (static_cast<int>(chi.size()) != m) throw InvalidArgument("forward: need one indicator per sub-step");

    std::vector<Vector> chain;
    chain.reserve(static_cast<std::size_t>(m));
    const Vector *current = &rho0;
    for (int i = 0; i < m; ++i) {
        chain.push_back(step(grid, *current, controls.velocity(i), controls.source(i), chi[i], diffusion, diagnostics));
        current = &chain.back();
    }
    return chain;
}

} // namespace uromt
