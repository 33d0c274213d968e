#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "veloplan/dynamics.hpp"
#include "veloplan/exactness.hpp"
#include "veloplan/experiments.hpp"
#include "veloplan/formulation.hpp"
#include "veloplan/scenarios.hpp"

using namespace veloplan;

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome
{
    bool pass = false;
    std::vector<std::string> details;
};

class Log
{
public:
    explicit Log(Outcome &o) : o_(o) {}
    template <typename... Args>
    void operator()(Args &&...args)
    {
        std::ostringstream line;
        (line << ... << args);
        o_.details.push_back(line.str());
    }

private:
    Outcome &o_;
};

const char *mark(bool ok) { return ok ? "ok" : "FAILED"; }

Outcome counterexample_reproduction()
{
    Outcome o;
    Log log(o);
    const auto start = Clock::now();
    const ProblemInstance instance = counterexample_instance();
    const SolveOutcome r = solve_instance(instance);
    const double elapsed = seconds_since(start);

    const bool optimal = r.raw.status == SolverStatus::Optimal;
    log("relaxation status ", to_string(r.raw.status), " after ", r.raw.iterations, " iterations: ",
        mark(optimal));
    if (!optimal || !r.extracted)
        return o;
    const bool not_exact = r.recovery && std::holds_alternative<NotExact>(*r.recovery);
    log("recovery returns NotExact (posterior gap ", r.exactness.posterior->gap, "): ", mark(not_exact));

    // The incline occupies 0-based steps 66..132.
    const ExtractedSolution &ex = *r.extracted;
    const VehicleParams &v = instance.vehicle;
    std::vector<std::size_t> violating;
    for (std::size_t i = 0; i < ex.f.size(); ++i)
        if (v.mass * ex.f[i] * std::sqrt(std::max(ex.w[i], 0.0)) > v.max_power * (1.0 + 1e-6))
            violating.push_back(i);
    const auto before = std::count_if(violating.begin(), violating.end(), [](std::size_t i) { return i < 66; });
    const auto during = std::count_if(violating.begin(), violating.end(),
                                      [](std::size_t i) { return i >= 66 && i <= 132; });
    if (!violating.empty())
        log("power limit exceeded on steps ", violating.front() + 1, "..", violating.back() + 1,
            " (1-based, ", violating.size(), " steps)");
    log("power limit exceeded before the incline (steps 1..66): ", before, " steps: ", mark(before > 0));
    log("power limit exceeded during the incline (steps 67..133): ", during, " steps: ", mark(during > 0));

    const auto launch_min = std::min_element(ex.w.begin() + 1, ex.w.begin() + 66);
    log("min w over the launch, points 2..66 = ", *launch_min, " (not compared)");
    const auto lowest = std::min_element(ex.w.begin() + 66, ex.w.end());
    const bool min_ok = *lowest >= 15.5 && *lowest <= 17.2;
    log("min w over points 67..200 = ", *lowest, " at point ", lowest - ex.w.begin() + 1,
        " (target [15.5, 17.2]): ", mark(min_ok));
    log("runtime ", elapsed, " s (limit 5 s): ", mark(elapsed < 5.0));
    o.pass = optimal && not_exact && before > 0 && during > 0 && min_ok && elapsed < 5.0;
    return o;
}

Outcome exactness_certification()
{
    Outcome o;
    Log log(o);
    bool ok = true;
    for (const VehiclePreset &vehicle : {fiat500(0.7), fiat500e(0.7)})
    {
        ScenarioConfig config;
        config.seed = 1;
        config.h = 3.0;
        const BatchResult batch = random_batch(config, vehicle, 100);
        std::size_t certified = 0, certified_not_exact = 0, over = 0;
        for (const BatchRow &row : batch.rows)
        {
            certified += row.a_priori;
            certified_not_exact += row.a_priori && !row.exact;
            over += !(row.gap <= 1e-6);
        }
        const bool pass = batch.failures == 0 && over == 0 && certified_not_exact == 0;
        log(vehicle.name, ": 100 instances, max gap ", batch.max_gap, ", solver failures ", batch.failures,
            ", gap > 1e-6 on ", over, ", a-priori certified ", certified, " (", certified_not_exact,
            " of them not exact), mean solve ", batch.mean_time, " s: ", mark(pass));
        ok = ok && pass;
    }
    o.pass = ok;
    return o;
}

Outcome condition_fixtures()
{
    Outcome o;
    Log log(o);
    const HCondition bench = check_h_condition(benchmark_path_instance(fiat500(0.7), 0.0, 200));
    const bool lhs_ok = std::abs(bench.lhs - 28.70) <= 1e-2;
    const bool rhs_ok = std::abs(bench.rhs - 18.38) <= 1e-2;
    log("Fiat 500 h=3: lhs ", bench.lhs, " vs 28.70 (|diff| ", std::abs(bench.lhs - 28.70), "): ", mark(lhs_ok));
    log("Fiat 500 h=3: rhs ", bench.rhs, " vs 18.38 (|diff| ", std::abs(bench.rhs - 18.38), "): ", mark(rhs_ok));
    log("Fiat 500 h=3: condition holds: ", mark(bench.holds()));

    const ProblemInstance ce = counterexample_instance();
    const ExactnessReport report = exactness_report(ce);
    const bool h_ok = report.h_condition.holds();
    const bool w_ok = !report.wmax_condition.holds;
    const bool c_ok = !report.critical_condition.holds();
    log("counterexample: h condition true (lhs ", report.h_condition.lhs, ", rhs ", report.h_condition.rhs,
        "): ", mark(h_ok));
    log("counterexample: speed-limit condition false: ", mark(w_ok));
    log("counterexample: critical-speed condition false: ", mark(c_ok));
    o.pass = lhs_ok && rhs_ok && bench.holds() && h_ok && w_ok && c_ok;
    return o;
}

bool within(double a, double b, double tol) { return a <= b + tol * std::max(1.0, std::abs(b)); }

Outcome pareto_front()
{
    Outcome o;
    Log log(o);
    const auto start = Clock::now();
    const std::vector<double> lambdas = standard_lambda_grid(100);
    const auto base = pareto_sweep(fiat500(), lambdas, 200);
    const auto electric = pareto_sweep(fiat500e(), lambdas, 200);
    const double elapsed = seconds_since(start);

    bool ok = true;
    for (const auto *front : {&base, &electric})
    {
        std::size_t failed = 0, time_breaks = 0, energy_breaks = 0;
        double max_gap = 0.0;
        for (std::size_t k = 0; k < front->size(); ++k)
        {
            const ParetoPoint &p = (*front)[k];
            failed += p.status != SolverStatus::Optimal || !p.error.empty();
            max_gap = std::max(max_gap, p.exactness_gap);
            if (k == 0)
                continue;
            const ParetoPoint &q = (*front)[k - 1];
            time_breaks += !within(q.travel_time, p.travel_time, 1e-6);
            energy_breaks += !within(p.energy, q.energy, 1e-6);
        }
        const bool pass = failed == 0 && time_breaks == 0 && energy_breaks == 0;
        log(front == &base ? "fiat500" : "fiat500e", ": ", front->size(), " points, failures ", failed,
            ", time decreases ", time_breaks, ", energy increases ", energy_breaks, ", max gap ", max_gap,
            ": ", mark(pass));
        ok = ok && pass;
    }

    std::size_t dominated = 0;
    for (std::size_t k = 0; k < base.size(); ++k)
        dominated += !within(electric[k].energy, base[k].energy, 1e-6);
    log("fiat500e energy <= fiat500 energy at every lambda (", dominated, " exceptions): ", mark(dominated == 0));
    log("sweep time ", elapsed, " s on ", sweep_threads(), " threads (limit 60 s): ", mark(elapsed < 60.0));
    o.pass = ok && dominated == 0 && elapsed < 60.0;
    return o;
}

ProblemInstance random_small_instance(std::mt19937_64 &rng, std::size_t n)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::vector<double> lambdas = lambda_grid(100, 1e-7, 1e-2, true);
    ProblemInstance instance;
    instance.vehicle = (unit(rng) < 0.5 ? fiat500() : fiat500e()).params;
    instance.path.step = 1.0 + 4.0 * unit(rng);
    for (std::size_t i = 0; i + 1 < n; ++i)
        instance.path.slope_sin.push_back(-0.05 + 0.1 * unit(rng));
    for (std::size_t i = 0; i < n; ++i)
        instance.path.w_max.push_back(50.0 + 600.0 * unit(rng));
    instance.w_init = std::min(instance.path.w_max[0], 5.0 + 300.0 * unit(rng));
    instance.lambda = lambdas[static_cast<std::size_t>(unit(rng) * 100.999)];
    return instance;
}

Outcome oracle_equivalence()
{
    Outcome o;
    Log log(o);
    std::vector<ProblemInstance> instances;
    for (double lambda : {0.0, 1e-6, 1e-4, 1e-2})
    {
        instances.push_back(benchmark_path_instance(fiat500(), lambda));
        instances.push_back(benchmark_path_instance(fiat500e(), lambda));
    }
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
    {
        ScenarioConfig config;
        config.seed = seed;
        instances.push_back(random_instance(config, seed % 2 ? fiat500() : fiat500e()));
    }

    std::size_t exact = 0;
    double worst_w = 0.0, worst_obj = 0.0;
    for (const ProblemInstance &instance : instances)
    {
        const SolveOutcome r = solve_instance(instance);
        if (!r.exact())
            continue;
        ++exact;
        const SpeedSolution &s = std::get<RecoveredSolution>(*r.recovery).solution;
        const SimulationResult sim = forward_simulate(instance.w_init, s.F, instance.path, instance.vehicle);
        for (std::size_t i = 0; i < s.w.size(); ++i)
            worst_w = std::max(worst_w, std::abs(sim.w[i] - s.w[i]) / std::max(1.0, std::abs(s.w[i])));
        const double solver_obj = r.extracted->objective;
        const double oracle_obj = evaluate_objective(s.w, s.F, instance).weighted;
        worst_obj = std::max(worst_obj, std::abs(oracle_obj - solver_obj) / std::max(1.0, std::abs(solver_obj)));
    }
    const bool sim_ok = exact > 0 && worst_w <= 1e-8;
    const bool obj_ok = exact > 0 && worst_obj <= 1e-8;
    log(exact, " of ", instances.size(), " solutions certified exact");
    log("re-simulated w, worst relative deviation ", worst_w, " (limit 1e-8): ", mark(sim_ok));
    log("oracle vs solver objective, worst relative deviation ", worst_obj, " (limit 1e-8): ", mark(obj_ok));

    std::mt19937_64 rng(2024);
    std::size_t compared = 0, infeasible = 0, bound_breaks = 0;
    double tightest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < 40; ++k)
    {
        const std::size_t n = 2 + k % 4;
        const ProblemInstance instance = random_small_instance(rng, n);
        const auto brute = brute_force_small(instance, n == 5 ? 41 : 101);
        if (!brute)
        {
            ++infeasible;
            continue;
        }
        const ConicProgram program = build_relaxation(instance);
        const ConicSolution s = solve_socp(program.data);
        ++compared;
        const double slack = 1e-7 * std::max(1.0, std::abs(brute->weighted_objective));
        const double margin = brute->weighted_objective - s.primal_objective;
        tightest = std::min(tightest, margin);
        bound_breaks += s.status != SolverStatus::Optimal || margin < -slack;
    }
    const bool bound_ok = compared > 0 && bound_breaks == 0;
    log("n <= 5: ", compared, " instances compared (", infeasible, " without a feasible grid point), ",
        "smallest brute-force minus relaxation ", tightest, ", violations ", bound_breaks, ": ", mark(bound_ok));
    o.pass = sim_ok && obj_ok && bound_ok;
    return o;
}

Outcome runtime_scaling_check()
{
    Outcome o;
    Log log(o);
    const auto records = runtime_scaling(fiat500(), {200, 1000}, 5);
    const BenchRecord &small = records[0];
    const BenchRecord &large = records[1];
    const double ratio = large.solve_time / small.solve_time;
    const bool ok_small = small.status == SolverStatus::Optimal && small.solve_time < 0.5;
    const bool ok_large = large.status == SolverStatus::Optimal && large.solve_time < 2.0;
    log("n=200 median ", small.solve_time, " s (limit 0.5 s): ", mark(ok_small));
    log("n=1000 median ", large.solve_time, " s (limit 2 s): ", mark(ok_large));
    log("ratio ", ratio, " (limit 10): ", mark(ratio <= 10.0));
    o.pass = ok_small && ok_large && ratio <= 10.0;
    return o;
}

Outcome analytic_micro_instance()
{
    Outcome o;
    Log log(o);
    ProblemInstance instance;
    instance.vehicle = fiat500().params;
    instance.path.step = 3.0;
    instance.path.slope_sin = {0.0};
    instance.path.w_max = {1975.0, 1975.0};
    instance.w_init = 625.0;
    const ConicProgram program = build_relaxation(instance);
    const ConicSolution s = solve_socp(program.data);
    const double err = std::abs(s.primal_objective - 0.12);
    log("status ", to_string(s.status), ", optimal value ", s.primal_objective, ", |value - 0.12| ", err,
        " (limit 1e-8): ", mark(s.status == SolverStatus::Optimal && err <= 1e-8));
    o.pass = s.status == SolverStatus::Optimal && err <= 1e-8;
    return o;
}

Outcome degenerate_profiles()
{
    Outcome o;
    Log log(o);
    o.pass = true;
    for (double lambda : {0.1, 0.99})
    {
        const DegenerateCheck d = degenerate_profile(lambda);
        log("lambda ", lambda, ": status ", to_string(d.status), ", first-half speed ", d.first_half_speed_kmh,
            " km/h, max descent force ", d.max_descent_force, " N, w ", d.descent_entry_w, " -> ",
            d.descent_exit_w, " over the descent: ", mark(d.passes()));
        o.pass = o.pass && d.passes();
    }
    return o;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Acceptance criteria for velo-plan"};
    std::vector<int> allowed;
    std::vector<int> only;
    app.add_option("--allow-fail", allowed,
                   "Criteria whose failure does not change the exit status (still reported as FAIL)")
        ->delimiter(',');
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    struct Criterion
    {
        int id;
        const char *name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "counterexample reproduction", counterexample_reproduction},
        {2, "exactness certification on 200 random instances", exactness_certification},
        {3, "condition arithmetic fixtures", condition_fixtures},
        {4, "Pareto front monotonicity and dominance", pareto_front},
        {5, "oracle equivalence", oracle_equivalence},
        {6, "runtime scaling", runtime_scaling_check},
        {7, "analytic micro-instance", analytic_micro_instance},
        {8, "degenerate profiles", degenerate_profiles},
    };

    const std::set<int> allow(allowed.begin(), allowed.end());
    const std::set<int> selected(only.begin(), only.end());
    int passed = 0, failed = 0, blocking = 0;
    for (const Criterion &c : criteria)
    {
        if (!selected.empty() && !selected.count(c.id))
            continue;
        const auto start = Clock::now();
        Outcome outcome;
        try
        {
            outcome = c.run();
        }
        catch (const std::exception &e)
        {
            outcome.details.push_back(std::string("exception: ") + e.what());
        }
        const double elapsed = seconds_since(start);
        std::cout << (outcome.pass ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.name << " ("
                  << elapsed << " s)" << (outcome.pass || !allow.count(c.id) ? "" : "  [known failure]")
                  << '\n';
        for (const std::string &line : outcome.details)
            std::cout << "      " << line << '\n';
        std::cout.flush();
        if (outcome.pass)
            ++passed;
        else
        {
            ++failed;
            blocking += !allow.count(c.id);
        }
    }
    std::cout << passed << " passed, " << failed << " failed";
    if (failed > blocking)
        std::cout << " (" << failed - blocking << " known)";
    std::cout << '\n';
    return blocking == 0 ? 0 : 1;
}
