#pragma once

#include <vector>

#include "uromt/grid.hpp"
#include "uromt/transport.hpp"

namespace uromt {

struct CostBreakdown {
    double kinetic = 0.0;   // gamma1
    double source = 0.0;    // gamma2, Fisher-Rao term
    double mismatch = 0.0;  // gamma3, end-point fit
    double alpha = 0.0;
    double beta = 0.0;
    double total = 0.0;
};

/// dt*dx*dy*dz * sum_i sum_x rho_{i+1} |v_i|^2.
double gamma1(const std::vector<Vector> &chain, const Controls &controls, const Grid &grid, double dt);

/// dt*dx*dy*dz * sum_i sum_x rho_{i+1} r_i^2 chi_i.
double gamma2(const std::vector<Vector> &chain, const Controls &controls, const IndicatorSeries &chi,
              const Grid &grid, double dt);

/// dx*dy*dz * ||rho_m - target||^2.
double gamma3(const Vector &final_density, const Vector &target, const Grid &grid);

CostBreakdown evaluate_cost(const std::vector<Vector> &chain, const Controls &controls, const IndicatorSeries &chi,
                            const Vector &target, const Grid &grid, double dt, double alpha, double beta);

} // namespace uromt
