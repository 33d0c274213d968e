#include "veloplan/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <ostream>
#include <thread>

#include "veloplan/error.hpp"

namespace veloplan
{

SolveOutcome solve_instance(const ProblemInstance &instance, const SolverConfig &config,
                            double gap_threshold)
{
    const ConicProgram program = build_relaxation(instance);
    SolveOutcome out;
    out.raw = solve_socp(program.data, config);
    out.solve_time = out.raw.wall_time;
    if (out.raw.status != SolverStatus::Optimal && out.raw.status != SolverStatus::MaxIter)
    {
        out.exactness = exactness_report(instance);
        out.exactness.certified_exact = false;
        out.exactness.clause = Certification::None;
        return out;
    }

    out.extracted = extract_solution(program, out.raw);
    const ExtractedSolution &ex = *out.extracted;
    const double h = instance.path.step;
    out.relaxed_time = h * std::accumulate(ex.t.begin(), ex.t.end(), 0.0);
    out.relaxed_energy =
        h * instance.vehicle.mass * std::accumulate(ex.e.begin(), ex.e.end(), 0.0);

    const bool positive = std::all_of(ex.w.begin(), ex.w.end() - 1, [](double w) { return w > 0.0; });
    if (!positive)
    {
        out.exactness = exactness_report(instance);
        out.exactness.certified_exact = false;
        out.exactness.clause = Certification::None;
        return out;
    }
    out.exactness = exactness_report(instance, ex, gap_threshold);
    out.recovery = recover_nonconvex(instance, ex, gap_threshold);
    std::vector<double> F(ex.f.size());
    std::transform(ex.f.begin(), ex.f.end(), F.begin(),
                   [&](double f) { return instance.vehicle.mass * f; });
    out.oracle = evaluate_objective(ex.w, F, instance);
    return out;
}

std::size_t sweep_threads(std::size_t requested)
{
    std::size_t threads = requested > 0 ? requested : std::thread::hardware_concurrency();
    threads = std::max<std::size_t>(threads, 1);
    if (const char *cap = std::getenv("VELO_PLAN_THREADS"))
    {
        std::size_t value = 0;
        const char *end = cap + std::char_traits<char>::length(cap);
        const auto [ptr, ec] = std::from_chars(cap, end, value);
        if (ec == std::errc() && ptr == end && value > 0)
            threads = std::min(threads, value);
    }
    return threads;
}

namespace
{

/// Runs task(0..count-1) on up to `threads` workers.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)> &task)
{
    threads = std::min(threads, count);
    if (threads <= 1)
    {
        for (std::size_t i = 0; i < count; ++i)
            task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t)
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++)
                task(i);
        });
}

double quantile(std::vector<double> sorted, double q)
{
    if (sorted.empty())
        return 0.0;
    std::sort(sorted.begin(), sorted.end());
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

std::vector<double> standard_lambda_grid(std::size_t samples)
{
    return lambda_grid(samples, 1e-7, 1e-2, true);
}

std::vector<ParetoPoint> pareto_sweep(const VehiclePreset &vehicle, std::vector<double> lambdas,
                                      std::size_t n, const SweepOptions &options)
{
    if (lambdas.empty())
        throw Error(ErrorCode::InvalidParameter, "pareto_sweep needs at least one lambda");
    for (double lambda : lambdas)
        if (!(lambda >= 0.0))
            throw Error(ErrorCode::InvalidParameter, "pareto_sweep: lambda must be >= 0");
    std::sort(lambdas.begin(), lambdas.end());

    std::vector<ParetoPoint> points(lambdas.size());
    parallel_for(lambdas.size(), sweep_threads(options.threads), [&](std::size_t k) {
        ParetoPoint &p = points[k];
        p.lambda = lambdas[k];
        try
        {
            const SolveOutcome r =
                solve_instance(benchmark_path_instance(vehicle, p.lambda, n), options.solver,
                               options.gap_threshold);
            p.status = r.raw.status;
            p.solve_time = r.solve_time;
            p.relaxed_time = r.relaxed_time;
            p.relaxed_energy = r.relaxed_energy;
            p.exact = r.exact();
            if (r.exactness.posterior)
                p.exactness_gap = r.exactness.posterior->gap;
            if (r.oracle)
            {
                p.travel_time = r.oracle->travel_time;
                p.energy = r.oracle->energy;
            }
            else
            {
                p.error = "no oracle evaluation (solver status or nonpositive speed)";
            }
        }
        catch (const std::exception &e)
        {
            p.error = e.what();
        }
    });
    return points;
}

std::vector<BenchRecord> runtime_scaling(const VehiclePreset &vehicle,
                                         const std::vector<std::size_t> &n_values,
                                         std::size_t repeats, double lambda,
                                         const SolverConfig &solver)
{
    repeats = std::max<std::size_t>(repeats, 1);
    std::vector<BenchRecord> records;
    records.reserve(n_values.size());
    for (std::size_t n : n_values)
    {
        if (n < 2)
            throw Error(ErrorCode::InvalidParameter, "runtime_scaling: n must be >= 2");
        const ConicProgram program = build_relaxation(benchmark_path_instance(vehicle, lambda, n));
        BenchRecord record;
        record.n = n;
        std::vector<double> times;
        for (std::size_t r = 0; r < repeats; ++r)
        {
            const ConicSolution sol = solve_socp(program.data, solver);
            times.push_back(sol.wall_time);
            record.status = sol.status;
        }
        record.solve_time = quantile(times, 0.5);
        records.push_back(record);
    }
    return records;
}

BatchResult random_batch(const ScenarioConfig &config, const VehiclePreset &vehicle,
                         std::size_t count, const SweepOptions &options)
{
    if (count == 0)
        throw Error(ErrorCode::InvalidParameter, "random_batch needs count >= 1");
    validate_config(config);
    BatchResult out;
    out.rows.resize(count);
    parallel_for(count, sweep_threads(options.threads), [&](std::size_t k) {
        ScenarioConfig c = config;
        c.seed = config.seed + k;
        const ProblemInstance instance = random_instance(c, vehicle);
        BatchRow &row = out.rows[k];
        row.seed = c.seed;
        row.lambda = instance.lambda;
        try
        {
            const SolveOutcome r = solve_instance(instance, options.solver, options.gap_threshold);
            row.status = r.raw.status;
            row.solve_time = r.solve_time;
            row.a_priori = r.exactness.a_priori;
            row.exact = r.exact();
            row.gap = r.exactness.posterior ? r.exactness.posterior->gap
                                            : std::numeric_limits<double>::infinity();
        }
        catch (const std::exception &)
        {
            row.status = SolverStatus::NumericalFailure;
            row.gap = std::numeric_limits<double>::infinity();
        }
    });

    std::vector<double> times;
    for (const BatchRow &row : out.rows)
    {
        times.push_back(row.solve_time);
        if (row.status == SolverStatus::Optimal && std::isfinite(row.gap))
            out.max_gap = std::max(out.max_gap, row.gap);
        else
            ++out.failures;
    }
    out.mean_time = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(count);
    out.median_time = quantile(times, 0.5);
    out.q1_time = quantile(times, 0.25);
    out.q3_time = quantile(times, 0.75);
    return out;
}

bool DegenerateCheck::passes(double force_tolerance) const
{
    return status == SolverStatus::Optimal && first_half_speed_kmh < 10.0 &&
           max_descent_force <= force_tolerance && descent_exit_w > descent_entry_w;
}

DegenerateCheck degenerate_profile(double lambda, std::size_t n, const SolverConfig &solver)
{
    const ProblemInstance instance = benchmark_path_instance(fiat500(), lambda, n);
    const ConicProgram program = build_relaxation(instance);
    const ConicSolution raw = solve_socp(program.data, solver);
    DegenerateCheck out;
    out.lambda = lambda;
    out.status = raw.status;
    if (raw.status != SolverStatus::Optimal)
        return out;
    const ExtractedSolution ex = extract_solution(program, raw);
    const PathProfile &path = instance.path;
    const double half = 0.5 * path.length();

    double distance = 0.0, time = 0.0;
    out.max_descent_force = -std::numeric_limits<double>::infinity();
    std::optional<std::size_t> first_descent, last_descent;
    for (std::size_t i = 0; i < path.steps(); ++i)
    {
        if (static_cast<double>(i + 1) * path.step <= half + 1e-9 && ex.w[i] > 0.0)
        {
            distance += path.step;
            time += path.step / std::sqrt(ex.w[i]);
        }
        if (path.slope_sin[i] < 0.0)
        {
            out.max_descent_force = std::max(out.max_descent_force, instance.vehicle.mass * ex.f[i]);
            if (!first_descent)
                first_descent = i;
            last_descent = i + 1;
        }
    }
    out.first_half_speed_kmh = time > 0.0 ? w_to_kmh(std::pow(distance / time, 2.0)) : 0.0;
    if (first_descent)
    {
        out.descent_entry_w = ex.w[*first_descent];
        out.descent_exit_w = ex.w[*last_descent];
    }
    return out;
}

std::string format_number(double value)
{
    if (!std::isfinite(value))
        return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, ptr);
}

void write_pareto_csv(std::ostream &out, const std::vector<ParetoPoint> &points)
{
    out << "lambda,time_s,energy_J,gap,solve_s\n";
    for (const ParetoPoint &p : points)
        out << format_number(p.lambda) << ',' << format_number(p.travel_time) << ','
            << format_number(p.energy) << ',' << format_number(p.exactness_gap) << ','
            << format_number(p.solve_time) << '\n';
}

void write_scaling_csv(std::ostream &out, const std::vector<BenchRecord> &records)
{
    out << "n,solve_s,status\n";
    for (const BenchRecord &r : records)
        out << r.n << ',' << format_number(r.solve_time) << ',' << to_string(r.status) << '\n';
}

void write_batch_csv(std::ostream &out, const std::vector<BatchRow> &rows)
{
    out << "seed,lambda,solve_time,gap,status\n";
    for (const BatchRow &r : rows)
        out << r.seed << ',' << format_number(r.lambda) << ',' << format_number(r.solve_time) << ','
            << format_number(r.gap) << ',' << to_string(r.status) << '\n';
}

} // namespace veloplan
