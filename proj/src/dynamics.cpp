#include "veloplan/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "veloplan/error.hpp"

namespace veloplan
{

namespace
{

void require_lengths(const std::vector<double> &w, const std::vector<double> &F,
                     const PathProfile &path, const char *where)
{
    if (w.size() != path.points() || F.size() != path.steps())
        throw Error(ErrorCode::InvalidParameter,
                    std::string(where) + ": expected " + std::to_string(path.points()) +
                        " speeds and " + std::to_string(path.steps()) + " forces");
}

double next_w(double w, double F, double slope_sin, double h, const VehicleParams &v)
{
    return w + (h / v.mass) *
                   (-v.drag_coeff * w + F - v.mass * kGravity * (slope_sin + v.rolling_coeff));
}

} // namespace

SimulationResult forward_simulate(double w_init, const std::vector<double> &F,
                                  const PathProfile &path, const VehicleParams &vehicle)
{
    if (F.size() != path.steps())
        throw Error(ErrorCode::InvalidParameter, "forward_simulate: force count must be n-1");
    if (!(w_init > 0.0))
        throw Error(ErrorCode::InvalidParameter, "forward_simulate: w_init must be positive");
    SimulationResult out;
    out.w.reserve(path.points());
    out.w.push_back(w_init);
    for (std::size_t i = 0; i < F.size(); ++i)
    {
        out.w.push_back(next_w(out.w.back(), F[i], path.slope_sin[i], path.step, vehicle));
        if (out.w.back() < 0.0 && !out.first_negative)
            out.first_negative = i + 1;
    }
    return out;
}

ObjectiveBreakdown evaluate_objective(const std::vector<double> &w, const std::vector<double> &F,
                                      const ProblemInstance &instance)
{
    const PathProfile &path = instance.path;
    require_lengths(w, F, path, "evaluate_objective");
    const VehicleParams &v = instance.vehicle;
    ObjectiveBreakdown out;
    out.per_step_power.reserve(F.size());
    for (std::size_t i = 0; i < F.size(); ++i)
    {
        if (!(w[i] > 0.0))
            throw Error(ErrorCode::SingularSpeed,
                        "evaluate_objective: w must be positive on step " + std::to_string(i + 1));
        const double root = std::sqrt(w[i]);
        out.travel_time += path.step / root;
        out.energy += path.step * std::max(v.regen_fraction * F[i], F[i]);
        out.per_step_power.push_back(F[i] * root);
    }
    out.weighted = instance.lambda * out.energy + out.travel_time;
    return out;
}

FeasibilityReport feasibility_check(const std::vector<double> &w, const std::vector<double> &F,
                                    const ProblemInstance &instance,
                                    const FeasibilityTolerances &tol)
{
    const PathProfile &path = instance.path;
    require_lengths(w, F, path, "feasibility_check");
    const VehicleParams &v = instance.vehicle;
    constexpr double lowest = -std::numeric_limits<double>::infinity();
    FeasibilityReport r;
    r.max_speed = r.force = r.power = r.min_speed = lowest;
    for (std::size_t i = 0; i < w.size(); ++i)
    {
        r.max_speed = std::max(r.max_speed, w[i] - path.w_max[i]);
        r.min_speed = std::max(r.min_speed, -w[i]);
    }
    for (std::size_t i = 0; i < F.size(); ++i)
    {
        r.force = std::max(r.force, std::abs(F[i]) - v.mass * kGravity * v.friction);
        r.power = std::max(r.power, F[i] * std::sqrt(std::max(w[i], 0.0)) - v.max_power);
        const double balance = v.mass / path.step * (w[i + 1] - w[i]) + v.drag_coeff * w[i] - F[i] +
                               v.mass * kGravity * (path.slope_sin[i] + v.rolling_coeff);
        r.dynamics = std::max(r.dynamics, std::abs(balance));
    }
    if (F.empty())
        r.force = r.power = 0.0;
    r.initial = std::abs(w.front() - instance.w_init);
    r.feasible = r.max_speed <= tol.speed && r.min_speed <= tol.speed && r.force <= tol.force &&
                 r.power <= tol.power && r.dynamics <= tol.dynamics && r.initial <= tol.initial;
    return r;
}

std::optional<SpeedSolution> brute_force_small(const ProblemInstance &instance,
                                               std::size_t grid_size)
{
    require_valid(instance);
    const PathProfile &path = instance.path;
    const VehicleParams &v = instance.vehicle;
    const std::size_t n = path.points();
    if (n > kBruteForceMaxPoints)
        throw Error(ErrorCode::InvalidParameter, "brute_force_small: n must not exceed 5");
    if (grid_size < 2 || grid_size > kBruteForceMaxGrid)
        throw Error(ErrorCode::InvalidParameter, "brute_force_small: grid size must lie in [2, 101]");
    if (instance.w_init > path.w_max.front())
        return std::nullopt;

    const double f_max = v.mass * kGravity * v.friction;
    std::vector<double> grid(grid_size);
    for (std::size_t k = 0; k < grid_size; ++k)
        grid[k] = -f_max + 2.0 * f_max * static_cast<double>(k) / static_cast<double>(grid_size - 1);

    const std::size_t steps = n - 1;
    std::vector<double> w(n), F(steps), best_F;
    w[0] = instance.w_init;
    double best = std::numeric_limits<double>::infinity();

    std::function<void(std::size_t, double)> descend = [&](std::size_t i, double cost) {
        if (i == steps)
        {
            if (cost < best)
            {
                best = cost;
                best_F = F;
            }
            return;
        }
        if (!(w[i] > 0.0))
            return;
        const double root = std::sqrt(w[i]);
        const double time = path.step / root;
        for (double force : grid)
        {
            if (force * root > v.max_power)
                break;
            const double w_next = next_w(w[i], force, path.slope_sin[i], path.step, v);
            if (w_next < 0.0 || w_next > path.w_max[i + 1])
                continue;
            w[i + 1] = w_next;
            F[i] = force;
            const double energy = path.step * std::max(v.regen_fraction * force, force);
            descend(i + 1, cost + instance.lambda * energy + time);
        }
    };
    descend(0, 0.0);
    if (best_F.empty() && steps > 0)
        return std::nullopt;

    SpeedSolution out;
    out.F = best_F;
    out.w = forward_simulate(instance.w_init, best_F, path, v).w;
    const ObjectiveBreakdown objective = evaluate_objective(out.w, out.F, instance);
    out.t.reserve(steps);
    for (std::size_t i = 0; i < steps; ++i)
        out.t.push_back(1.0 / std::sqrt(out.w[i]));
    out.energy = objective.energy;
    out.time = objective.travel_time;
    out.weighted_objective = objective.weighted;
    out.exactness_gap = 0.0;
    out.solver_status = SolverStatus::Optimal;
    return out;
}

} // namespace veloplan
