#include "uromt/solver.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "uromt/digest.hpp"
#include "uromt/sensitivity.hpp"

namespace uromt {

std::string to_string(IndicatorMode mode) {
    switch (mode) {
    case IndicatorMode::CenterRegions: return "center-regions";
    case IndicatorMode::AllOnes: return "all-ones";
    case IndicatorMode::Zero: return "zero";
    }
    return "unknown";
}

std::string to_string(Termination t) {
    switch (t) {
    case Termination::MaxIterations: return "max-iters";
    case Termination::LineSearchFailed: return "line-search-failed";
    case Termination::GradientTolerance: return "gradient-tol";
    }
    return "unknown";
}

void UromtConfig::validate() const {
    const auto fail = [](const std::string &key, const std::string &why) { throw InvalidArgument(key + ": " + why); };
    const char *dim_keys[] = {"n1", "n2", "n3"};
    const char *spacing_keys[] = {"dx", "dy", "dz"};
    for (int a = 0; a < 3; ++a) {
        if (dims[a] <= 0) fail(dim_keys[a], "must be a positive integer");
        if (!(spacing[a] > 0.0)) fail(spacing_keys[a], "must be positive");
    }
    if (frames < 2) fail("q", "need at least two images");
    if (steps < 1) fail("m", "must be at least 1");
    if (!(dt > 0.0)) fail("dt", "must be positive");
    if (!(sigma >= 0.0)) fail("sigma", "must be non-negative");
    if (!(alpha > 0.0)) fail("alpha", "must be positive");
    if (!(beta > 0.0)) fail("beta", "must be positive");
    if (max_outer_iters < 0) fail("max_outer_iters", "must be non-negative");
    if (!(cg_tol > 0.0)) fail("cg_tol", "must be positive");
    if (cg_max_iters < 1) fail("cg_max_iters", "must be at least 1");
    if (ls_max_backtracks < 1) fail("ls_max_backtracks", "must be at least 1");
    if (!(grad_tol > 0.0)) fail("grad_tol", "must be positive");
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) fail("armijo_c", "must lie in (0, 1)");
}

NewtonStep solve_newton_system(const LinearOperator &hessian, const Vector &g, double cg_tol, int cg_max_iters) {
    NewtonStep out;
    const double gnorm = g.norm();
    out.direction = Vector::Zero(g.size());
    out.residual_history.push_back(gnorm > 0.0 ? 1.0 : 0.0);
    if (gnorm == 0.0) {
        out.relative_residual = 0.0;
        return out;
    }

    // Conjugate residuals: same Krylov space as CG, but each iterate minimizes
    // ||H x + g||, so the residual history is nonincreasing.
    Vector x = Vector::Zero(g.size());
    Vector r = -g;
    Vector p = r;
    Vector Hr = hessian(r);
    Vector Hp = Hr;
    double rHr = r.dot(Hr);
    double best = 1.0;
    for (int k = 0; k < cg_max_iters; ++k) {
        const double HpHp = Hp.squaredNorm();
        if (!(rHr > 0.0) || !(HpHp > 0.0)) break;
        const double step = rHr / HpHp;
        x += step * p;
        r -= step * Hp;
        const double rel = r.norm() / gnorm;
        out.residual_history.push_back(rel);
        out.iterations = k + 1;
        if (rel < best) {
            best = rel;
            out.direction = x;
        }
        if (rel <= cg_tol || k + 1 == cg_max_iters) break;
        Hr = hessian(r);
        const double rHr_next = r.dot(Hr);
        const double beta = rHr_next / rHr;
        p = r + beta * p;
        Hp = Hr + beta * Hp;
        rHr = rHr_next;
    }
    out.relative_residual = best;

    if (!(out.direction.dot(g) < 0.0)) {
        out.direction = -g;
        out.fallback = true;
    }
    return out;
}

LineSearchResult line_search(const std::function<double(const Vector &)> &cost, const Vector &point,
                             const Vector &step, double current_cost, int max_trials, const double *armijo_slope,
                             double armijo_c) {
    LineSearchResult out;
    double length = 1.0;
    for (int t = 0; t < max_trials; ++t, length *= 0.5) {
        const double trial = cost(point + length * step);
        ++out.trials;
        const bool ok = armijo_slope ? trial <= current_cost + armijo_c * length * *armijo_slope
                                     : trial < current_cost;
        if (ok && std::isfinite(trial)) {
            out.accepted = true;
            out.length = length;
            out.cost = trial;
            return out;
        }
    }
    return out;
}

namespace {

std::string dump(int iteration, const CostBreakdown &c, double gnorm) {
    std::ostringstream os;
    os.precision(17);
    os << "iteration " << iteration << ": gamma1=" << c.kinetic << " gamma2=" << c.source << " gamma3=" << c.mismatch
       << " total=" << c.total << " |g|=" << gnorm;
    return os.str();
}

} // namespace

TransportSolution gauss_newton(const Grid &grid, const Vector &rho0, const Vector &target,
                               const IndicatorSeries &chi, const UromtConfig &config,
                               const ProgressCallback &progress) {
    config.validate();
    if (rho0.size() != grid.size() || target.size() != grid.size())
        throw InvalidArgument("gauss_newton: images do not match the grid");
    if (static_cast<int>(chi.size()) != config.steps)
        throw InvalidArgument("gauss_newton: need one indicator per sub-step");
    if ((rho0.array() < 0.0).any() || (target.array() < 0.0).any())
        throw InvalidArgument("gauss_newton: images must be non-negative");
    for (const auto &c : chi) validate_indicator(c);

    const auto diffusion = std::make_shared<const DiffusionSolver>(grid, config.sigma, config.dt);
    const int m = config.steps;
    Controls x(grid.size(), m);

    std::vector<Vector> chain = forward(grid, rho0, x, chi, *diffusion);
    CostBreakdown cost = evaluate_cost(chain, x, chi, target, grid, config.dt, config.alpha, config.beta);
    if (!std::isfinite(cost.total)) throw NumericalFailure("non-finite initial cost; " + dump(0, cost, 0.0));

    TransportSolution sol{rho0, x, {}, {cost}, Termination::MaxIterations, 0};
    double g0 = -1.0;

    for (int it = 1; it <= config.max_outer_iters; ++it) {
        const auto cache = LinearizationCache::build(grid, rho0, x, chi, diffusion);
        const Vector g = gradient(cache, config.alpha, config.beta, target);
        const double gnorm = g.norm();
        if (!std::isfinite(gnorm)) throw NumericalFailure("non-finite gradient; " + dump(it, cost, gnorm));
        if (g0 < 0.0) g0 = gnorm;
        if (gnorm <= config.grad_tol * g0) {
            sol.termination = Termination::GradientTolerance;
            break;
        }

        require_fresh(cache, rho0, x);
        const auto newton = solve_newton_system(
            [&](const Vector &v) { return hessian_apply(cache, v, config.alpha, config.beta); }, g, config.cg_tol,
            config.cg_max_iters);

        std::vector<Vector> trial_chain;
        CostBreakdown trial_cost;
        const auto evaluate = [&](const Vector &point) {
            const Controls c(grid.size(), m, point);
            trial_chain = forward(grid, rho0, c, chi, *diffusion);
            trial_cost = evaluate_cost(trial_chain, c, chi, target, grid, config.dt, config.alpha, config.beta);
            return trial_cost.total;
        };
        const double slope = g.dot(newton.direction);
        const auto ls = line_search(evaluate, x.packed(), newton.direction, cost.total, config.ls_max_backtracks,
                                    config.armijo ? &slope : nullptr, config.armijo_c);
        if (!ls.accepted) {
            sol.termination = Termination::LineSearchFailed;
            break;
        }

        x.packed() += ls.length * newton.direction;
        chain = std::move(trial_chain);
        cost = trial_cost;
        sol.cost_trace.push_back(cost);
        sol.iterations = it;
        if (progress)
            progress(IterationReport{0, it, cost, gnorm, ls.length, newton.iterations, newton.fallback});
    }

    sol.controls = x;
    sol.interpolations = std::move(chain);
    return sol;
}

SequenceResult run_sequence(const Grid &grid, const std::vector<Vector> &images,
                            const std::vector<IndicatorSeries> &chi, const UromtConfig &config,
                            const ProgressCallback &progress) {
    config.validate();
    if (images.size() < 2) throw InvalidArgument("run_sequence: need at least two images");
    if (chi.size() != images.size() - 1) throw InvalidArgument("run_sequence: need one indicator series per pair");

    SequenceResult result;
    result.config = config;
    for (const auto &img : images) {
        if (img.size() != grid.size()) throw InvalidArgument("run_sequence: images must share the grid");
        result.input_digests.push_back(sha256_hex(img));
    }

    for (std::size_t k = 0; k + 1 < images.size(); ++k) {
        const Vector &start = (config.reuse_last_interp && k > 0) ? result.loops.back().final_density() : images[k];
        const int loop = static_cast<int>(k) + 1;
        ProgressCallback tagged;
        if (progress)
            tagged = [&progress, loop](const IterationReport &r) {
                IterationReport copy = r;
                copy.loop = loop;
                progress(copy);
            };
        try {
            result.loops.push_back(gauss_newton(grid, start, images[k + 1], chi[k], config, tagged));
        } catch (const std::exception &e) {
            throw SequenceAborted("loop " + std::to_string(loop) + " failed: " + e.what(), std::move(result));
        }
    }
    return result;
}

} // namespace uromt
