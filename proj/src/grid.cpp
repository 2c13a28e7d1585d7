#include "uromt/grid.hpp"

#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "uromt/error.hpp"

namespace uromt {

Grid::Grid(Index3 dims, std::array<double, 3> spacing) : dims_(dims), spacing_(spacing) {
    for (int a = 0; a < 3; ++a) {
        if (dims_[a] <= 0)
            throw InvalidArgument("grid dimension " + std::to_string(a) + " must be positive, got " +
                                  std::to_string(dims_[a]));
        if (!(spacing_[a] > 0.0))
            throw InvalidArgument("grid spacing " + std::to_string(a) + " must be positive, got " +
                                  std::to_string(spacing_[a]));
    }
    n_ = dims_[0] * dims_[1] * dims_[2];
}

Grid build_grid(Index3 dims, std::array<double, 3> spacing) { return Grid(dims, spacing); }

SparseMatrix build_laplacian(const Grid &grid) {
    const auto n = grid.size();
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(7 * n));

    const std::array<std::ptrdiff_t, 3> stride{1, grid.dim(0), grid.dim(0) * grid.dim(1)};
    for (std::ptrdiff_t idx = 0; idx < n; ++idx) {
        const Index3 c = grid.coords(idx);
        double diag = 0.0;
        for (int a = 0; a < 3; ++a) {
            const double w = 1.0 / (grid.spacing(a) * grid.spacing(a));
            // A missing neighbour mirrors this cell, so its contribution cancels.
            if (c[a] > 0) {
                entries.emplace_back(idx, idx - stride[a], w);
                diag -= w;
            }
            if (c[a] + 1 < grid.dim(a)) {
                entries.emplace_back(idx, idx + stride[a], w);
                diag -= w;
            }
        }
        entries.emplace_back(idx, idx, diag);
    }

    SparseMatrix Q(n, n);
    Q.setFromTriplets(entries.begin(), entries.end());
    return Q;
}

struct DiffusionSolver::Impl {
    Eigen::DiagonalPreconditioner<double> jacobi;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt;
};

DiffusionSolver::DiffusionSolver(const Grid &grid, double sigma, double dt)
    : DiffusionSolver(grid, sigma, dt, Options{}) {}

DiffusionSolver::DiffusionSolver(const Grid &grid, double sigma, double dt, Options options)
    : sigma_(sigma), dt_(dt), identity_(sigma == 0.0), options_(options), impl_(std::make_unique<Impl>()) {
    if (!(sigma >= 0.0)) throw InvalidArgument("diffusion coefficient must be non-negative");
    if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");

    SparseMatrix I(grid.size(), grid.size());
    I.setIdentity();
    L_ = I - (sigma * dt) * build_laplacian(grid);
    L_.makeCompressed();
    if (identity_) return;

    if (options_.method == Method::Direct) {
        impl_->ldlt.compute(L_);
        if (impl_->ldlt.info() != Eigen::Success) throw SolverError("LDLT factorization of L failed", 0.0);
    } else {
        impl_->jacobi.compute(L_);
    }
}

DiffusionSolver::~DiffusionSolver() = default;
DiffusionSolver::DiffusionSolver(DiffusionSolver &&) noexcept = default;
DiffusionSolver &DiffusionSolver::operator=(DiffusionSolver &&) noexcept = default;

Vector DiffusionSolver::solve(const Vector &b) const {
    if (b.size() != L_.rows()) throw InvalidArgument("diffusion solve: right-hand side has wrong length");
    if (identity_) return b;
    if (options_.method == Method::Direct) return impl_->ldlt.solve(b);

    if (b.squaredNorm() == 0.0) return Vector::Zero(b.size());
    // The free-function CG keeps no state, so concurrent solves are safe.
    Vector x = b;
    Eigen::Index iterations = options_.max_iterations;
    double residual = options_.tolerance;
    Eigen::internal::conjugate_gradient(L_, b, x, impl_->jacobi, iterations, residual);
    if (residual > options_.tolerance)
        throw SolverError("conjugate gradient on L did not converge after " + std::to_string(iterations) +
                              " iterations",
                          residual);
    return x;
}

} // namespace uromt
