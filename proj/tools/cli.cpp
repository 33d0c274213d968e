#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "veloplan/error.hpp"
#include "veloplan/experiments.hpp"
#include "veloplan/instance_io.hpp"

namespace veloplan::cli
{

namespace
{

namespace fs = std::filesystem;
using nlohmann::json;

struct Options
{
    std::string target;
    std::string vehicle = "fiat500";
    double lambda = 0.0;
    double mu = 0.7;
    std::size_t n = 200;
    std::uint64_t seed = 0;
    double step = 3.0;
    double w_max_kmh = 130.0;
    std::string out_dir = ".";
    std::string output;
    SolverConfig solver;
    double gap_threshold = kDefaultGapThreshold;
    std::size_t samples = 100;
    std::vector<std::size_t> n_list{50, 100, 200, 500, 1000};
    std::size_t repeats = 1;
    std::size_t count = 100;
    std::size_t threads = 0;
};

bool ends_with(const std::string &s, const std::string &suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

ProblemInstance named_scenario(const std::string &name, const Options &o)
{
    if (name == "counterexample")
        return counterexample_instance();
    if (name == "benchmark")
        return benchmark_path_instance(vehicle_preset(o.vehicle, o.mu), o.lambda, o.n);
    if (name == "random")
    {
        ScenarioConfig config;
        config.seed = o.seed;
        return random_instance(config, vehicle_preset(o.vehicle, o.mu));
    }
    throw Error(ErrorCode::InvalidParameter, "unknown scenario '" + name + "'");
}

/// A path to an instance document or elevation CSV, or a scenario name.
ProblemInstance resolve_instance(const Options &o)
{
    if (ends_with(o.target, ".csv"))
        return load_elevation_csv(o.target, o.step, vehicle_preset(o.vehicle, o.mu).params, o.lambda,
                                  kmh_to_w(o.w_max_kmh));
    if (ends_with(o.target, ".json") || fs::exists(o.target))
        return load_instance(o.target);
    return named_scenario(o.target, o);
}

fs::path prepare_output(const Options &o)
{
    const fs::path dir(o.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw Error(ErrorCode::InvalidParameter, "cannot create output directory '" + o.out_dir + "'");
    return dir;
}

void write_file(const fs::path &path, const std::string &content)
{
    std::ofstream file(path, std::ios::binary);
    if (!(file << content))
        throw Error(ErrorCode::InvalidParameter, "cannot write '" + path.string() + "'");
}

json residuals_json(const ResidualRecord &r)
{
    return {{"primal", r.primal},       {"dual", r.dual},       {"gap", r.gap},
            {"primal_eq", r.primal_eq}, {"cone", r.primal_cone}, {"dual_eq", r.dual_eq},
            {"dual_cone", r.dual_cone}};
}

json feasibility_json(const FeasibilityReport &f)
{
    return {{"max_speed", f.max_speed}, {"force", f.force},        {"power", f.power},
            {"dynamics", f.dynamics},   {"min_speed", f.min_speed}, {"initial", f.initial},
            {"feasible", f.feasible}};
}

std::string solution_csv(const ProblemInstance &instance, const ExtractedSolution &ex)
{
    const double mass = instance.vehicle.mass;
    std::ostringstream csv;
    csv << "i,s_m,w_m2s2,v_kmh,F_N,power_W,t_spm\n";
    for (std::size_t i = 0; i < ex.w.size(); ++i)
    {
        const double w = ex.w[i];
        csv << i + 1 << ',' << format_number(static_cast<double>(i) * instance.path.step) << ','
            << format_number(w) << ',' << format_number(w_to_kmh(std::max(w, 0.0))) << ',';
        if (i < ex.f.size())
        {
            const double F = mass * ex.f[i];
            csv << format_number(F) << ',' << format_number(F * std::sqrt(std::max(w, 0.0))) << ','
                << format_number(ex.t[i]);
        }
        else
        {
            csv << ",,";
        }
        csv << '\n';
    }
    return csv.str();
}

int exit_code_for(const SolveOutcome &r)
{
    switch (r.raw.status)
    {
    case SolverStatus::Infeasible: return kInfeasible;
    case SolverStatus::MaxIter:
    case SolverStatus::NumericalFailure: return kSolverFailure;
    case SolverStatus::Optimal: break;
    }
    if (!r.recovery)
        return kSolverFailure;
    return r.exact() ? kExact : kNotExact;
}

int cmd_solve(const Options &o, std::ostream &out)
{
    const ProblemInstance instance = resolve_instance(o);
    const fs::path dir = prepare_output(o);
    const SolveOutcome r = solve_instance(instance, o.solver, o.gap_threshold);
    const int code = exit_code_for(r);

    json report = {{"schema", kInstanceSchema},
                   {"instance_hash", instance_hash(instance)},
                   {"status", to_string(r.raw.status)},
                   {"iterations", r.raw.iterations},
                   {"solve_time_s", r.solve_time},
                   {"residuals", residuals_json(r.raw.final_residuals)},
                   {"exactness", to_json(r.exactness)},
                   {"exit_code", code}};
    if (r.raw.certificate)
        report["certificate"] = {{"primal_infeasible", r.raw.certificate->primal_infeasible},
                                 {"dual_infeasible", r.raw.certificate->dual_infeasible},
                                 {"ray_residual", r.raw.certificate->ray_residual},
                                 {"summary", r.raw.certificate->summary}};
    if (r.extracted)
    {
        report["objective"] = {{"relaxed", r.extracted->objective},
                               {"relaxed_time_s", r.relaxed_time},
                               {"relaxed_energy_J", r.relaxed_energy}};
        report["physical_residuals"] = {{"dynamics", r.extracted->physical.dynamics},
                                        {"power", r.extracted->physical.power},
                                        {"time_bound", r.extracted->physical.time_bound}};
        write_file(dir / "solution.csv", solution_csv(instance, *r.extracted));
    }
    if (r.oracle)
    {
        report["objective"]["travel_time_s"] = r.oracle->travel_time;
        report["objective"]["energy_J"] = r.oracle->energy;
        report["objective"]["weighted"] = r.oracle->weighted;
    }
    if (r.recovery)
    {
        if (const auto *rec = std::get_if<RecoveredSolution>(&*r.recovery))
        {
            report["recovery"] = {{"exact", true}, {"feasibility", feasibility_json(rec->feasibility)}};
        }
        else
        {
            const NotExact &ne = std::get<NotExact>(*r.recovery);
            json steps = json::array();
            for (std::size_t s : ne.steps)
                steps.push_back(s + 1);
            report["recovery"] = {{"exact", false},
                                  {"gap", ne.gap},
                                  {"steps", steps},
                                  {"residuals", ne.residuals},
                                  {"traction_bounded", ne.traction_bounded},
                                  {"power_active", ne.power_active},
                                  {"decelerating", ne.decelerating}};
        }
    }
    write_file(dir / "report.json", report.dump(2) + "\n");
    out << to_string(r.raw.status) << ' '
        << (r.exactness.posterior ? "gap=" + format_number(r.exactness.posterior->gap) : "gap=n/a")
        << (r.exact() ? " exact" : " not-exact") << '\n';
    return code;
}

int cmd_check(const Options &o, std::ostream &out)
{
    const ProblemInstance instance = resolve_instance(o);
    const fs::path dir = prepare_output(o);
    const ExactnessReport report = exactness_report(instance);
    json doc = to_json(report);
    doc["instance_hash"] = instance_hash(instance);
    write_file(dir / "report.json", doc.dump(2) + "\n");
    out << "h_condition=" << report.h_condition.holds()
        << " wmax_condition=" << report.wmax_condition.holds
        << " critical_condition=" << report.critical_condition.holds() << '\n';
    return report.a_priori ? kExact : kNotExact;
}

int cmd_scenario(const Options &o, std::ostream &out)
{
    const ProblemInstance instance = named_scenario(o.target, o);
    const fs::path dir = prepare_output(o);
    const fs::path file = dir / (o.output.empty() ? "instance.json" : o.output);
    save_instance(instance, file.string());
    out << file.string() << ' ' << instance_hash(instance) << '\n';
    return kExact;
}

SweepOptions sweep_options(const Options &o)
{
    SweepOptions s;
    s.threads = o.threads;
    s.solver = o.solver;
    s.gap_threshold = o.gap_threshold;
    return s;
}

int cmd_pareto(const Options &o, std::ostream &out)
{
    const VehiclePreset vehicle = vehicle_preset(o.vehicle, o.mu);
    const fs::path dir = prepare_output(o);
    const auto points = pareto_sweep(vehicle, standard_lambda_grid(o.samples), o.n, sweep_options(o));
    std::ostringstream csv;
    write_pareto_csv(csv, points);
    write_file(dir / "pareto.csv", csv.str());
    std::size_t failed = 0;
    for (const ParetoPoint &p : points)
        failed += p.status != SolverStatus::Optimal;
    out << points.size() << " points, " << failed << " failed\n";
    return failed == 0 ? kExact : kSolverFailure;
}

int cmd_bench(const Options &o, std::ostream &out)
{
    const VehiclePreset vehicle = vehicle_preset(o.vehicle, o.mu);
    const fs::path dir = prepare_output(o);
    const auto records = runtime_scaling(vehicle, o.n_list, o.repeats, o.lambda, o.solver);
    std::ostringstream csv;
    write_scaling_csv(csv, records);
    write_file(dir / "scaling.csv", csv.str());
    bool ok = true;
    for (const BenchRecord &r : records)
    {
        out << "n=" << r.n << " " << format_number(r.solve_time) << " s " << to_string(r.status) << '\n';
        ok = ok && r.status == SolverStatus::Optimal;
    }
    return ok ? kExact : kSolverFailure;
}

int cmd_batch(const Options &o, std::ostream &out)
{
    const VehiclePreset vehicle = vehicle_preset(o.vehicle, o.mu);
    const fs::path dir = prepare_output(o);
    ScenarioConfig config;
    config.seed = o.seed;
    const BatchResult result = random_batch(config, vehicle, o.count, sweep_options(o));
    std::ostringstream csv;
    write_batch_csv(csv, result.rows);
    write_file(dir / "batch.csv", csv.str());
    out << "mean=" << format_number(result.mean_time) << " s median=" << format_number(result.median_time)
        << " s max_gap=" << format_number(result.max_gap) << " failures=" << result.failures << '\n';
    return result.failures == 0 ? kExact : kSolverFailure;
}

void add_solver_flags(CLI::App *cmd, Options &o)
{
    cmd->add_option("--eq-tol", o.solver.eq_tol, "Relative primal/dual residual tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--gap-tol", o.solver.gap_tol, "Relative duality gap tolerance")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-iters", o.solver.max_iters, "Interior-point iteration limit")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--gap-threshold", o.gap_threshold, "Posterior gap accepted as exact [s/m]")
        ->check(CLI::PositiveNumber);
}

void add_vehicle_flags(CLI::App *cmd, Options &o)
{
    cmd->add_option("--vehicle", o.vehicle, "Vehicle preset")
        ->check(CLI::IsMember({"fiat500", "fiat500e"}));
    cmd->add_option("--mu", o.mu, "Friction coefficient")->check(CLI::PositiveNumber);
}

void add_instance_flags(CLI::App *cmd, Options &o)
{
    add_vehicle_flags(cmd, o);
    cmd->add_option("--lambda", o.lambda, "Energy weight [s/J]")->check(CLI::NonNegativeNumber);
    cmd->add_option("--n", o.n, "Number of path points")->check(CLI::Range(2, 1000000));
    cmd->add_option("--seed", o.seed, "Seed for the random scenario");
}

} // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
    Options o;
    CLI::App app{"Speed planning along a fixed path via a convex SOCP relaxation", "velo-plan"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("-o,--out", o.out_dir, "Output directory")->capture_default_str();

    CLI::App *solve = app.add_subcommand("solve", "Solve an instance and certify exactness");
    solve->add_option("instance", o.target,
                      "instance.json, elevation .csv, or benchmark|counterexample|random")
        ->required();
    add_instance_flags(solve, o);
    add_solver_flags(solve, o);
    solve->add_option("--step", o.step, "Resampling step for elevation CSV input [m]")
        ->check(CLI::PositiveNumber);
    solve->add_option("--w-max-kmh", o.w_max_kmh, "Speed limit where the CSV gives none [km/h]")
        ->check(CLI::PositiveNumber);

    CLI::App *check = app.add_subcommand("check", "Evaluate the a-priori exactness conditions");
    check->add_option("instance", o.target, "instance.json or scenario name")->required();
    add_instance_flags(check, o);

    CLI::App *scenario = app.add_subcommand("scenario", "Write a named scenario as instance.json");
    scenario->add_option("name", o.target, "Scenario")
        ->required()
        ->check(CLI::IsMember({"counterexample", "benchmark", "random"}));
    add_instance_flags(scenario, o);
    scenario->add_option("--file", o.output, "Output file name inside the output directory");

    CLI::App *pareto = app.add_subcommand("pareto", "Sweep lambda on the benchmark path");
    add_vehicle_flags(pareto, o);
    add_solver_flags(pareto, o);
    pareto->add_option("--samples", o.samples, "Log-spaced lambda values besides 0")
        ->check(CLI::Range(1, 100000));
    pareto->add_option("--n", o.n, "Number of path points")->check(CLI::Range(2, 1000000));
    pareto->add_option("--threads", o.threads, "Worker threads (0 = hardware)");

    CLI::App *bench = app.add_subcommand("bench", "Time solves of the benchmark path for several n");
    add_vehicle_flags(bench, o);
    add_solver_flags(bench, o);
    bench->add_option("--n-list", o.n_list, "Path sizes")->delimiter(',')->check(CLI::Range(2, 1000000));
    bench->add_option("--repeats", o.repeats, "Solves per size; the median is reported")
        ->check(CLI::PositiveNumber);
    bench->add_option("--lambda", o.lambda, "Energy weight [s/J]")->check(CLI::NonNegativeNumber);

    CLI::App *batch = app.add_subcommand("batch", "Solve seeded random instances");
    add_vehicle_flags(batch, o);
    add_solver_flags(batch, o);
    batch->add_option("--count", o.count, "Number of instances")->check(CLI::PositiveNumber);
    batch->add_option("--seed", o.seed, "First seed");
    batch->add_option("--threads", o.threads, "Worker threads (0 = hardware)");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        out << app.help();
        return 0;
    }
    catch (const CLI::ParseError &e)
    {
        err << "velo-plan: " << e.what() << "\n\n" << app.help();
        return kInputError;
    }

    try
    {
        if (solve->parsed())
            return cmd_solve(o, out);
        if (check->parsed())
            return cmd_check(o, out);
        if (scenario->parsed())
            return cmd_scenario(o, out);
        if (pareto->parsed())
            return cmd_pareto(o, out);
        if (bench->parsed())
            return cmd_bench(o, out);
        return cmd_batch(o, out);
    }
    catch (const Error &e)
    {
        err << "velo-plan: " << to_string(e.code()) << ": " << e.what() << '\n';
        return e.code() == ErrorCode::NoSolution ? kSolverFailure : kInputError;
    }
    catch (const std::exception &e)
    {
        err << "velo-plan: " << e.what() << '\n';
        return kSolverFailure;
    }
}

} // namespace veloplan::cli
