#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "uromt/error.hpp"
#include "uromt/grid.hpp"
#include "uromt/objective.hpp"
#include "uromt/transport.hpp"

namespace uromt {

enum class IndicatorMode { CenterRegions, AllOnes, Zero };

std::string to_string(IndicatorMode mode);

/// Problem and solver parameters. Defaults match the shared columns of the
/// published parameter table (m = 10, dt = 0.4, sigma = 0.002, unit spacing).
struct UromtConfig {
    std::string preset = "custom";
    Index3 dims{50, 50, 50};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    int frames = 2;  // q, number of input images
    int steps = 10;  // m, sub-intervals between two images
    double dt = 0.4;
    double sigma = 0.002;
    double alpha = 10000.0;
    double beta = 5000.0;
    IndicatorMode indicator = IndicatorMode::AllOnes;

    int max_outer_iters = 100;
    double cg_tol = 1e-2;
    int cg_max_iters = 20;
    int ls_max_backtracks = 12;
    /// Stop once ||g|| <= grad_tol * ||g_0||.
    double grad_tol = 1e-10;
    /// Sufficient-decrease (Armijo) line search instead of simple decrease.
    bool armijo = false;
    double armijo_c = 1e-4;
    bool reuse_last_interp = false;
    bool deterministic = true;

    /// Throws InvalidArgument naming the first offending key.
    void validate() const;
};

enum class Termination { MaxIterations, LineSearchFailed, GradientTolerance };

std::string to_string(Termination t);

struct IterationReport {
    int loop = 0;
    int iteration = 0;
    CostBreakdown cost;
    double gradient_norm = 0.0;
    double step_length = 0.0;
    int cg_iterations = 0;
    bool steepest_descent_fallback = false;
};

using ProgressCallback = std::function<void(const IterationReport &)>;

struct TransportSolution {
    Vector initial;                       // rho_0 used for this loop
    Controls controls;                    // optimal v*, r*
    std::vector<Vector> interpolations;   // rho_1 .. rho_m
    std::vector<CostBreakdown> cost_trace;  // initial cost, then one entry per accepted step
    Termination termination = Termination::MaxIterations;
    int iterations = 0;

    const Vector &final_density() const { return interpolations.back(); }
};

struct NewtonStep {
    Vector direction;
    int iterations = 0;
    double relative_residual = 1.0;
    bool fallback = false;
    std::vector<double> residual_history;  // ||H x_k + g|| / ||g|| per CG iterate, starting at x_0 = 0
};

using LinearOperator = std::function<Vector(const Vector &)>;

/// Truncated conjugate-residual solve of H x = -g from x = 0 for symmetric
/// positive semidefinite H. The residual norm is nonincreasing; the iterate with
/// the smallest residual is returned, and if it is not a descent direction
/// (x.g >= 0, e.g. when H vanishes along g) it is replaced by -g.
NewtonStep solve_newton_system(const LinearOperator &hessian, const Vector &g, double cg_tol, int cg_max_iters);

struct LineSearchResult {
    bool accepted = false;
    double length = 0.0;
    double cost = 0.0;
    int trials = 0;
};

/// Tries lengths 1, 1/2, 1/4, ... (max_trials in total) and accepts the first with
/// cost(point + l*step) < current_cost, or, when `armijo_slope` is given, with
/// cost <= current_cost + armijo_c * l * slope.
LineSearchResult line_search(const std::function<double(const Vector &)> &cost, const Vector &point,
                             const Vector &step, double current_cost, int max_trials,
                             const double *armijo_slope = nullptr, double armijo_c = 1e-4);

/// Gauss-Newton solve of one interval, starting from v = 0, r = 0.
TransportSolution gauss_newton(const Grid &grid, const Vector &rho0, const Vector &target,
                               const IndicatorSeries &chi, const UromtConfig &config,
                               const ProgressCallback &progress = {});

struct SequenceResult {
    std::vector<TransportSolution> loops;
    UromtConfig config;
    std::vector<std::string> input_digests;
};

/// A loop failed; `partial()` holds every loop completed before it.
class SequenceAborted : public Error {
public:
    SequenceAborted(const std::string &what, SequenceResult partial)
        : Error(what), partial_(std::move(partial)) {}
    const SequenceResult &partial() const noexcept { return partial_; }

private:
    SequenceResult partial_;
};

/// Solves q-1 consecutive intervals. `chi[k]` holds the m indicators of pair
/// (k, k+1). With reuse_last_interp, loop k starts from loop k-1's rho_m.
SequenceResult run_sequence(const Grid &grid, const std::vector<Vector> &images,
                            const std::vector<IndicatorSeries> &chi, const UromtConfig &config,
                            const ProgressCallback &progress = {});

} // namespace uromt
