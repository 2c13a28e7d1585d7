#include "uromt/objective.hpp"

#include "uromt/error.hpp"

namespace uromt {

namespace {

void check_chain(const std::vector<Vector> &chain, const Controls &controls, const Grid &grid) {
    if (static_cast<int>(chain.size()) != controls.steps())
        throw InvalidArgument("cost: density chain length differs from the number of sub-steps");
    if (controls.voxels() != grid.size()) throw InvalidArgument("cost: controls do not match the grid");
}

} // namespace

double gamma1(const std::vector<Vector> &chain, const Controls &controls, const Grid &grid, double dt) {
    check_chain(chain, controls, grid);
    const auto n = grid.size();
    double sum = 0.0;
    for (int i = 0; i < controls.steps(); ++i) {
        const auto v = controls.velocity(i);
        const Vector speed2 = v.segment(0, n).cwiseAbs2() + v.segment(n, n).cwiseAbs2() + v.segment(2 * n, n).cwiseAbs2();
        sum += chain[i].dot(speed2);
    }
    return dt * grid.voxel_volume() * sum;
}

double gamma2(const std::vector<Vector> &chain, const Controls &controls, const IndicatorSeries &chi,
              const Grid &grid, double dt) {
    check_chain(chain, controls, grid);
    if (static_cast<int>(chi.size()) != controls.steps()) throw InvalidArgument("cost: need one indicator per sub-step");
    double sum = 0.0;
    for (int i = 0; i < controls.steps(); ++i)
        sum += chain[i].dot(controls.source(i).cwiseAbs2().cwiseProduct(chi[i]));
    return dt * grid.voxel_volume() * sum;
}

double gamma3(const Vector &final_density, const Vector &target, const Grid &grid) {
    if (final_density.size() != grid.size() || target.size() != grid.size())
        throw InvalidArgument("gamma3: field lengths differ from the grid");
    return grid.voxel_volume() * (final_density - target).squaredNorm();
}

CostBreakdown evaluate_cost(const std::vector<Vector> &chain, const Controls &controls, const IndicatorSeries &chi,
                            const Vector &target, const Grid &grid, double dt, double alpha, double beta) {
    CostBreakdown c;
    c.kinetic = gamma1(chain, controls, grid, dt);
    c.source = gamma2(chain, controls, chi, grid, dt);
    c.mismatch = gamma3(chain.back(), target, grid);
    c.alpha = alpha;
    c.beta = beta;
    c.total = c.kinetic + alpha * c.source + beta * c.mismatch;
    return c;
}

} // namespace uromt
