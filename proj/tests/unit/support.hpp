#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "uromt/grid.hpp"
#include "uromt/objective.hpp"
#include "uromt/sensitivity.hpp"
#include "uromt/transport.hpp"

namespace testing {

using uromt::Vector;

inline Vector uniform(std::mt19937_64 &rng, std::ptrdiff_t n, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Vector v(n);
    for (auto &x : v) x = dist(rng);
    return v;
}

inline Vector bernoulli(std::mt19937_64 &rng, std::ptrdiff_t n, double p = 0.5) {
    std::bernoulli_distribution dist(p);
    Vector v(n);
    for (auto &x : v) x = dist(rng) ? 1.0 : 0.0;
    return v;
}

inline uromt::Controls random_controls(std::mt19937_64 &rng, std::ptrdiff_t n, int m, double vmax, double rmax) {
    uromt::Controls c(n, m);
    c.velocities() = uniform(rng, c.velocity_size(), -vmax, vmax);
    c.sources() = uniform(rng, c.source_size(), -rmax, rmax);
    return c;
}

inline uromt::IndicatorSeries random_indicators(std::mt19937_64 &rng, std::ptrdiff_t n, int m) {
    uromt::IndicatorSeries chi;
    for (int i = 0; i < m; ++i) chi.push_back(bernoulli(rng, n));
    return chi;
}

inline Eigen::MatrixXd dense(const uromt::SparseMatrix &A) { return Eigen::MatrixXd(A); }

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

/// kinetic*gamma1 + alpha*gamma2 + beta*gamma3 evaluated by a fresh forward run.
inline double weighted_cost(const uromt::Grid &g, const Vector &rho0, const Vector &packed, int m,
                            const uromt::IndicatorSeries &chi, const Vector &target,
                            const uromt::DiffusionSolver &d, const uromt::CostWeights &w) {
    const uromt::Controls c(g.size(), m, packed);
    const auto chain = uromt::forward(g, rho0, c, chi, d);
    return w.kinetic * uromt::gamma1(chain, c, g, d.dt()) + w.alpha * uromt::gamma2(chain, c, chi, g, d.dt()) +
           w.beta * uromt::gamma3(chain.back(), target, g);
}

/// Central differences of weighted_cost in every packed coordinate.
inline Vector fd_gradient(const uromt::Grid &g, const Vector &rho0, const Vector &packed, int m,
                          const uromt::IndicatorSeries &chi, const Vector &target, const uromt::DiffusionSolver &d,
                          const uromt::CostWeights &w, double h = 1e-6) {
    Vector grad(packed.size());
    Vector x = packed;
    for (Eigen::Index i = 0; i < packed.size(); ++i) {
        x[i] = packed[i] + h;
        const double up = weighted_cost(g, rho0, x, m, chi, target, d, w);
        x[i] = packed[i] - h;
        const double down = weighted_cost(g, rho0, x, m, chi, target, d, w);
        x[i] = packed[i];
        grad[i] = (up - down) / (2 * h);
    }
    return grad;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string &name) {
    auto dir = std::filesystem::temp_directory_path() / ("uromt_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testing
