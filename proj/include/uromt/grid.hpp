#pragma once

#include <array>
#include <cstddef>
#include <memory>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace uromt {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index3 = std::array<std::ptrdiff_t, 3>;

/// Cell-centered regular 3D grid.
///
/// Voxel (i, j, k) has linear index i + n1*(j + n2*k): x varies fastest, then y,
/// then z. Voxel centers sit at physical coordinates (i*dx, j*dy, k*dz).
class Grid {
public:
    Grid(Index3 dims, std::array<double, 3> spacing);

    const Index3 &dims() const noexcept { return dims_; }
    std::ptrdiff_t dim(int axis) const noexcept { return dims_[axis]; }
    const std::array<double, 3> &spacing() const noexcept { return spacing_; }
    double spacing(int axis) const noexcept { return spacing_[axis]; }
    std::ptrdiff_t size() const noexcept { return n_; }
    double voxel_volume() const noexcept { return spacing_[0] * spacing_[1] * spacing_[2]; }

    std::ptrdiff_t index(std::ptrdiff_t i, std::ptrdiff_t j, std::ptrdiff_t k) const noexcept {
        return i + dims_[0] * (j + dims_[1] * k);
    }
    Index3 coords(std::ptrdiff_t idx) const noexcept {
        return {idx % dims_[0], (idx / dims_[0]) % dims_[1], idx / (dims_[0] * dims_[1])};
    }

    bool operator==(const Grid &other) const noexcept {
        return dims_ == other.dims_ && spacing_ == other.spacing_;
    }
    bool operator!=(const Grid &other) const noexcept { return !(*this == other); }

private:
    Index3 dims_;
    std::array<double, 3> spacing_;
    std::ptrdiff_t n_;
};

/// Throws InvalidArgument for non-positive dimensions or spacings.
Grid build_grid(Index3 dims, std::array<double, 3> spacing);

/// Seven-point Laplacian with zero-flux (mirrored ghost cell) boundaries.
/// Symmetric, and every row and column sums to zero.
SparseMatrix build_laplacian(const Grid &grid);

/// Implicit diffusion operator L = I - sigma*dt*Q together with a reusable solver.
///
/// Solves are stateless: the iterative method always starts from the right-hand
/// side, so repeated solves of the same system return identical bits.
class DiffusionSolver {
public:
    enum class Method { ConjugateGradient, Direct };

    struct Options {
        Method method = Method::ConjugateGradient;
        double tolerance = 1e-12;
        int max_iterations = 1000;
    };

    DiffusionSolver(const Grid &grid, double sigma, double dt);
    DiffusionSolver(const Grid &grid, double sigma, double dt, Options options);
    ~DiffusionSolver();
    DiffusionSolver(DiffusionSolver &&) noexcept;
    DiffusionSolver &operator=(DiffusionSolver &&) noexcept;

    const SparseMatrix &matrix() const noexcept { return L_; }
    double sigma() const noexcept { return sigma_; }
    double dt() const noexcept { return dt_; }
    bool is_identity() const noexcept { return identity_; }

    /// x = L^{-1} b. Throws SolverError if the iterative method does not converge.
    Vector solve(const Vector &b) const;

private:
    struct Impl;
    SparseMatrix L_;
    double sigma_;
    double dt_;
    bool identity_;
    Options options_;
    std::unique_ptr<Impl> impl_;
};

} // namespace uromt
