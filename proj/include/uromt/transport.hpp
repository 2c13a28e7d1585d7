#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "uromt/grid.hpp"

namespace uromt {

/// Packed optimization variables for one transport interval.
///
/// Layout: [v_0; ...; v_{m-1}; r_0; ...; r_{m-1}], where each v_i holds all x
/// components, then all y components, then all z components (3n values) and
/// each r_i holds n relative-source values.
class Controls {
public:
    Controls(std::ptrdiff_t voxels, int steps);
    Controls(std::ptrdiff_t voxels, int steps, Vector packed);

    std::ptrdiff_t voxels() const noexcept { return n_; }
    int steps() const noexcept { return m_; }
    std::ptrdiff_t velocity_size() const noexcept { return 3 * n_ * m_; }
    std::ptrdiff_t source_size() const noexcept { return n_ * m_; }

    auto velocity(int i) { return data_.segment(3 * n_ * i, 3 * n_); }
    auto velocity(int i) const { return data_.segment(3 * n_ * i, 3 * n_); }
    auto source(int i) { return data_.segment(3 * n_ * m_ + n_ * i, n_); }
    auto source(int i) const { return data_.segment(3 * n_ * m_ + n_ * i, n_); }
    auto velocities() { return data_.head(velocity_size()); }
    auto velocities() const { return data_.head(velocity_size()); }
    auto sources() { return data_.tail(source_size()); }
    auto sources() const { return data_.tail(source_size()); }

    Vector &packed() noexcept { return data_; }
    const Vector &packed() const noexcept { return data_; }

private:
    std::ptrdiff_t n_;
    int m_;
    Vector data_;
};

/// One 0/1 indicator per sub-step.
using IndicatorSeries = std::vector<Vector>;

/// Throws InvalidArgument unless every entry is exactly 0 or 1.
void validate_indicator(const Vector &chi);

/// Replicates a single indicator across `steps` sub-steps.
IndicatorSeries replicate_indicator(const Vector &chi, int steps);

struct StepDiagnostics {
    /// Voxels where 1 + dt*r*chi < 0, i.e. the source step produced negative mass.
    std::size_t negative_source_voxels = 0;
};

/// Particle-in-cell deposition along one axis: up to three grid nodes with the
/// fraction of mass each receives and the derivative of that fraction with
/// respect to the displacement (in index units).
struct Deposition1D {
    std::array<std::ptrdiff_t, 3> node{};
    std::array<double, 3> weight{};
    std::array<double, 3> slope{};
    int count = 0;
};

/// Deposits a particle displaced from node `center` by `shift` index units onto an
/// axis of `extent` nodes. Positions outside [0, extent-1] are clamped, which
/// gives zero slope. At exactly integer positions the hat functions have a kink
/// and the slope is the mean of the left and right one-sided derivatives.
Deposition1D deposit_1d(std::ptrdiff_t center, double shift, std::ptrdiff_t extent);

/// (1 + dt*r*chi) * rho, element-wise.
Vector apply_source(const Vector &rho, const Eigen::Ref<const Vector> &source, const Vector &chi, double dt,
                    StepDiagnostics *diagnostics = nullptr);

/// Averaging matrix S(v): column k spreads voxel k's mass trilinearly over the
/// nodes surrounding its displaced center (displacement dt*v/spacing, clamped to
/// the domain). Every column sums to one and all entries are non-negative.
SparseMatrix build_pic_matrix(const Grid &grid, const Eigen::Ref<const Vector> &velocity, double dt);

/// S(v) * rho.
Vector apply_advection(const Grid &grid, const Vector &rho, const Eigen::Ref<const Vector> &velocity, double dt);

/// rho_{i+1} = L^{-1} S(v_i) R(r_i) rho_i.
Vector step(const Grid &grid, const Vector &rho, const Eigen::Ref<const Vector> &velocity,
            const Eigen::Ref<const Vector> &source, const Vector &chi, const DiffusionSolver &diffusion,
            StepDiagnostics *diagnostics = nullptr);

/// Runs the full chain and returns rho_1 ... rho_m.
std::vector<Vector> forward(const Grid &grid, const Vector &rho0, const Controls &controls,
                            const IndicatorSeries &chi, const DiffusionSolver &diffusion,
                            StepDiagnostics *diagnostics = nullptr);

} // namespace uromt
