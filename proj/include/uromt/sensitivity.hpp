#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "uromt/grid.hpp"
#include "uromt/transport.hpp"

namespace uromt {

/// Local advection Jacobian B = d/dv [S(v) mass], an n x 3n operator. Column
/// a*n + k holds the derivative of voxel k's deposition with respect to its
/// a-component of velocity, scaled by the mass being moved.
SparseMatrix build_advection_jacobian(const Grid &grid, const Eigen::Ref<const Vector> &velocity, double dt,
                                      const Vector &mass);

/// 64-bit FNV-1a digest of the initial density and the packed controls.
std::uint64_t controls_fingerprint(const Vector &rho0, const Controls &controls);

/// Weights of the three cost terms. The kinetic weight is 1 in normal use; the
/// tests zero it to check each term in isolation.
struct CostWeights {
    double kinetic = 1.0;
    double alpha = 0.0;
    double beta = 0.0;
};

/// Everything the gradient and Gauss-Newton products need at one point (v, r):
/// the density chain and, per sub-step, S(v_i), the source scaling 1 + dt*r_i*chi_i,
/// rho_i*chi_i, and B(rho_i, r_i). Immutable once built.
class LinearizationCache {
public:
    static LinearizationCache build(const Grid &grid, const Vector &rho0, const Controls &controls,
                                    const IndicatorSeries &chi, std::shared_ptr<const DiffusionSolver> diffusion);

    const Grid &grid() const noexcept { return grid_; }
    int steps() const noexcept { return static_cast<int>(pic_.size()); }
    double dt() const noexcept { return diffusion_->dt(); }
    const DiffusionSolver &diffusion() const noexcept { return *diffusion_; }
    const Controls &controls() const noexcept { return controls_; }
    const IndicatorSeries &indicators() const noexcept { return chi_; }

    /// rho_k for k = 0..m.
    const Vector &density(int k) const { return densities_.at(static_cast<std::size_t>(k)); }
    /// rho_1 .. rho_m.
    std::vector<Vector> chain() const { return {densities_.begin() + 1, densities_.end()}; }

    const SparseMatrix &pic(int i) const { return pic_.at(static_cast<std::size_t>(i)); }
    const SparseMatrix &advection_jacobian(int i) const { return adv_jac_.at(static_cast<std::size_t>(i)); }
    const Vector &source_scale(int i) const { return scale_.at(static_cast<std::size_t>(i)); }
    const Vector &masked_density(int i) const { return rho_chi_.at(static_cast<std::size_t>(i)); }

    std::uint64_t fingerprint() const noexcept { return fingerprint_; }

private:
    LinearizationCache(Grid grid, Controls controls) : grid_(std::move(grid)), controls_(std::move(controls)) {}

    Grid grid_;
    Controls controls_;
    IndicatorSeries chi_;
    std::shared_ptr<const DiffusionSolver> diffusion_;
    std::vector<Vector> densities_;
    std::vector<SparseMatrix> pic_;
    std::vector<SparseMatrix> adv_jac_;
    std::vector<Vector> scale_;
    std::vector<Vector> rho_chi_;
    std::uint64_t fingerprint_ = 0;
};

/// Throws StaleCacheError unless `cache` was built from exactly (rho0, controls).
void require_fresh(const LinearizationCache &cache, const Vector &rho0, const Controls &controls);

/// Directional derivative of the chain: [J_v | J_r] x for a packed direction x.
/// Returns d rho_1 .. d rho_m.
std::vector<Vector> jacobian_apply(const LinearizationCache &cache, const Vector &direction);

/// Final block only: J^m x = J_v^m x_v + J_r^m x_r.
Vector final_jacobian_apply(const LinearizationCache &cache, const Vector &direction);

/// [J_v^T w; J_r^T w] in the packed control layout, for adjoint seeds w_1 .. w_m
/// (one per density in the chain). Computed by back-propagation through the chain.
Vector jacobian_transpose_apply(const LinearizationCache &cache, const std::vector<Vector> &seeds);

/// [(J_v^m)^T y; (J_r^m)^T y].
Vector final_jacobian_transpose_apply(const LinearizationCache &cache, const Vector &y);

/// Gradient of kinetic*gamma1 + alpha*gamma2 + beta*gamma3 in the packed layout.
Vector gradient(const LinearizationCache &cache, const CostWeights &weights, const Vector &target);
Vector gradient(const LinearizationCache &cache, double alpha, double beta, const Vector &target);

/// Gauss-Newton Hessian-vector product. The first-order diagonal blocks
/// 2*dt*h^3*diag(M^T rho) and 2*alpha*dt*h^3*diag(rho.chi) act element-wise on
/// x_v and x_r, and the end-point term adds 2*beta*h^3*(J^m)^T J^m x.
Vector hessian_apply(const LinearizationCache &cache, const Vector &x, const CostWeights &weights);
Vector hessian_apply(const LinearizationCache &cache, const Vector &x, double alpha, double beta);

} // namespace uromt
