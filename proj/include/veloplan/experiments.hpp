#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "veloplan/conic_solver.hpp"
#include "veloplan/dynamics.hpp"
#include "veloplan/exactness.hpp"
#include "veloplan/formulation.hpp"
#include "veloplan/scenarios.hpp"

namespace veloplan
{

/// Everything produced by one build-solve-certify pass.
struct SolveOutcome
{
    ConicSolution raw;
    std::optional<ExtractedSolution> extracted;
    ExactnessReport exactness;
    std::optional<Recovery> recovery;
    /// Oracle evaluation of the relaxed point (w, M f); absent when some
    /// step speed is not positive.
    std::optional<ObjectiveBreakdown> oracle;
    double relaxed_time = 0.0;   // h sum t_i
    double relaxed_energy = 0.0; // h M sum e_i
    double solve_time = 0.0;     // wall time of solve_socp [s]

    bool solved() const { return extracted.has_value(); }
    bool exact() const { return recovery && std::holds_alternative<RecoveredSolution>(*recovery); }
};

SolveOutcome solve_instance(const ProblemInstance &instance, const SolverConfig &config = {},
                            double gap_threshold = kDefaultGapThreshold);

/// Worker count for sweeps: `requested` (or the hardware concurrency when
/// zero), capped by VELO_PLAN_THREADS when that variable holds a positive
/// integer.
std::size_t sweep_threads(std::size_t requested = 0);

struct SweepOptions
{
    std::size_t threads = 0;
    SolverConfig solver;
    double gap_threshold = kDefaultGapThreshold;
};

struct ParetoPoint
{
    double lambda = 0.0;
    double travel_time = 0.0;   // oracle [s]
    double energy = 0.0;        // oracle [J]
    double exactness_gap = 0.0; // [s/m]
    double solve_time = 0.0;    // [s]
    double relaxed_time = 0.0;
    double relaxed_energy = 0.0;
    SolverStatus status = SolverStatus::NumericalFailure;
    bool exact = false;
    std::string error;
};

/// One benchmark-path solve per lambda, sorted by lambda. Failures are
/// recorded in the point and the sweep continues.
std::vector<ParetoPoint> pareto_sweep(const VehiclePreset &vehicle, std::vector<double> lambdas,
                                      std::size_t n = 200, const SweepOptions &options = {});

/// {0} followed by `samples` log-spaced values in [1e-7, 1e-2].
std::vector<double> standard_lambda_grid(std::size_t samples = 100);

struct BenchRecord
{
    std::size_t n = 0;
    double solve_time = 0.0; // median over repeats [s]
    SolverStatus status = SolverStatus::NumericalFailure;
};

/// Benchmark path resampled to each n, solved sequentially `repeats` times.
std::vector<BenchRecord> runtime_scaling(const VehiclePreset &vehicle,
                                         const std::vector<std::size_t> &n_values,
                                         std::size_t repeats = 1, double lambda = 0.0,
                                         const SolverConfig &solver = {});

struct BatchRow
{
    std::uint64_t seed = 0;
    double lambda = 0.0;
    double solve_time = 0.0;
    double gap = 0.0;
    SolverStatus status = SolverStatus::NumericalFailure;
    bool a_priori = false;
    bool exact = false;
};

struct BatchResult
{
    std::vector<BatchRow> rows;
    double mean_time = 0.0;
    double median_time = 0.0;
    double q1_time = 0.0;
    double q3_time = 0.0;
    double max_gap = 0.0; // over solved rows
    std::size_t failures = 0;
};

/// `count` random instances with seeds config.seed, config.seed + 1, ...
BatchResult random_batch(const ScenarioConfig &config, const VehiclePreset &vehicle,
                         std::size_t count, const SweepOptions &options = {});

struct DegenerateCheck
{
    double lambda = 0.0;
    SolverStatus status = SolverStatus::NumericalFailure;
    double first_half_speed_kmh = 0.0; // distance over time on the first 300 m
    double max_descent_force = 0.0;    // max F_i over descending steps [N]
    double descent_entry_w = 0.0;
    double descent_exit_w = 0.0;

    bool passes(double force_tolerance = 1e-6) const;
};

/// Fiat 500 on the benchmark path with a heavy energy weight.
DegenerateCheck degenerate_profile(double lambda, std::size_t n = 200,
                                   const SolverConfig &solver = {});

void write_pareto_csv(std::ostream &out, const std::vector<ParetoPoint> &points);
void write_scaling_csv(std::ostream &out, const std::vector<BenchRecord> &records);
void write_batch_csv(std::ostream &out, const std::vector<BatchRow> &rows);

/// Shortest round-trip decimal form, independent of the global locale.
std::string format_number(double value);

} // namespace veloplan
