#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "veloplan/model.hpp"

namespace veloplan
{

struct SimulationResult
{
    std::vector<double> w;
    std::optional<std::size_t> first_negative; // first point with w < 0, if any

    bool negative_speed() const { return first_negative.has_value(); }
};

/// Integrates w_{i+1} = w_i + (h/M)(-Gamma w_i + F_i - M g sin(alpha_i) - M g c)
/// from w_init. Negative squared speeds are returned unclipped and flagged.
SimulationResult forward_simulate(double w_init, const std::vector<double> &F,
                                  const PathProfile &path, const VehicleParams &vehicle);

struct ObjectiveBreakdown
{
    double travel_time = 0.0;            // sum h / sqrt(w_i) [s]
    double energy = 0.0;                 // sum h max(eta F_i, F_i) [J]
    double weighted = 0.0;               // lambda * energy + travel_time
    std::vector<double> per_step_power;  // F_i sqrt(w_i) [W]
};

/// Throws SingularSpeed if w_i <= 0 on a step, InvalidParameter on length
/// mismatch.
ObjectiveBreakdown evaluate_objective(const std::vector<double> &w, const std::vector<double> &F,
                                      const ProblemInstance &instance);

struct FeasibilityTolerances
{
    double speed = 1e-6;    // m^2/s^2
    double force = 1e-6;    // N
    double power = 1e-5;    // W
    double dynamics = 1e-6; // N
    double initial = 1e-9;  // m^2/s^2
};

/// Worst violation per constraint family of the original problem; a positive
/// value is a violation.
struct FeasibilityReport
{
    double max_speed = 0.0; // max_i w_i - w_max_i
    double force = 0.0;     // max_i |F_i| - M g mu
    double power = 0.0;     // max_i F_i sqrt(w_i) - P_max
    double dynamics = 0.0;  // max_i |M (w_{i+1} - w_i) / h + Gamma w_i - F_i + M g (sin + c)|
    double min_speed = 0.0; // max_i -w_i
    double initial = 0.0;   // |w_1 - w_init|
    bool feasible = false;
};

FeasibilityReport feasibility_check(const std::vector<double> &w, const std::vector<double> &F,
                                    const ProblemInstance &instance,
                                    const FeasibilityTolerances &tolerances = {});

inline constexpr std::size_t kBruteForceMaxPoints = 5;
inline constexpr std::size_t kBruteForceMaxGrid = 101;

/// Exhaustive search over F_i on a uniform grid of `grid_size` values in
/// [-M g mu, M g mu]. Among feasible candidates the best weighted objective
/// wins; ties go to the lexicographically smallest force sequence. Returns
/// nothing when no grid point is feasible. Throws InvalidParameter when
/// n > 5, grid_size > 101 or grid_size < 2.
std::optional<SpeedSolution> brute_force_small(const ProblemInstance &instance,
                                               std::size_t grid_size);

} // namespace veloplan
