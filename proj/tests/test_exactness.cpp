#include <doctest.h>

#include <cmath>

#include "test_support.hpp"
#include "veloplan/error.hpp"
#include "veloplan/exactness.hpp"
#include "veloplan/formulation.hpp"
#include "veloplan/scenarios.hpp"

using namespace veloplan;

namespace
{

ExtractedSolution solve_extract(const ProblemInstance &instance)
{
    const ConicProgram p = build_relaxation(instance);
    return extract_solution(p, solve_socp(p.data));
}

ExtractedSolution cruise_point(const ProblemInstance &instance, double w)
{
    const VehicleParams &v = instance.vehicle;
    ExtractedSolution ex;
    ex.w.assign(instance.path.points(), w);
    ex.f.assign(instance.path.steps(), (v.drag_coeff * w) / v.mass + kGravity * v.rolling_coeff);
    ex.t.assign(instance.path.steps(), 1.0 / std::sqrt(w));
    return ex;
}

} // namespace

TEST_SUITE("exactness")
{
    TEST_CASE("step-length condition for the Fiat 500 benchmark")
    {
        const HCondition hc = check_h_condition(benchmark_path_instance(fiat500(0.7), 0.0));
        CHECK(std::abs(hc.lhs - 28.70) <= 1e-2);
        CHECK(hc.rhs == doctest::Approx(std::cbrt(std::pow(50750.0 * 3.0 / (2.0 * 967.0), 2.0))));
        CHECK(hc.rhs == doctest::Approx(18.368).epsilon(1e-4));
        CHECK(hc.holds());
        CHECK_FALSE(hc.forms_disagree);
    }

    TEST_CASE("step-length condition for the counterexample")
    {
        const HCondition hc = check_h_condition(counterexample_instance());
        CHECK(std::abs(hc.lhs - 9.40) <= 1e-2);
        CHECK(std::abs(hc.rhs - 3.47) <= 1e-2);
        CHECK(hc.verdict == Verdict::Holds);
    }

    TEST_CASE("step-length condition fails for long steps")
    {
        const HCondition hc = check_h_condition(test::flat_instance(3, 100.0, 10.0));
        CHECK(hc.lhs < 0.0);
        CHECK(hc.verdict == Verdict::Fails);
    }

    TEST_CASE("step-length condition is undefined when lambda makes the denominator vanish")
    {
        ProblemInstance instance = test::flat_instance(3, 0.01, 10.0);
        instance.lambda = 2.0;
        const HCondition hc = check_h_condition(instance);
        CHECK(hc.verdict == Verdict::Undefined);
        CHECK(std::isnan(hc.rhs));
        CHECK(hc.rhs_without_lambda.has_value());
    }

    TEST_CASE("speed-limit margin on a 4% grade at 90 km/h")
    {
        ProblemInstance instance = test::flat_instance(4, 3.0, 10.0, 625.0);
        instance.path.slope_sin.assign(3, 0.04);
        const WmaxCondition wc = check_wmax_condition(instance);
        REQUIRE(wc.margins.size() == 3);
        CHECK(wc.margins[0] == doctest::Approx(1.375).epsilon(1e-3));
        CHECK(wc.holds);
    }

    TEST_CASE("speed-limit margin fails on the counterexample incline")
    {
        const ProblemInstance instance = counterexample_instance();
        const WmaxCondition wc = check_wmax_condition(instance);
        CHECK_FALSE(wc.holds);
        REQUIRE(wc.worst_step);
        CHECK(instance.path.slope_sin[*wc.worst_step] > 0.38);
        CHECK(wc.margins[*wc.worst_step] == doctest::Approx(0.291 - 4.652).epsilon(1e-3));
    }

    TEST_CASE("speed-limit margin holds as the limit approaches zero")
    {
        CHECK(check_wmax_condition(test::flat_instance(3, 3.0, 1e-9, 1e-8)).holds);
    }

    TEST_CASE("critical-speed bracket on the counterexample incline")
    {
        const ProblemInstance instance = counterexample_instance();
        const CriticalCondition cc = check_critical_condition(instance);
        CHECK(cc.verdict == Verdict::Fails);
        double worst = 0.0;
        for (std::size_t k = 0; k < cc.brackets.size(); ++k)
            if (instance.path.slope_sin[cc.bracket_steps[k]] > 0.0)
                worst = std::min(worst, cc.brackets[k]);
        CHECK(worst == doctest::Approx(2.689 - 0.010 - 3.823).epsilon(2e-3));
    }

    TEST_CASE("critical-speed condition is vacuous when no limit exceeds the critical speed")
    {
        const CriticalCondition cc = check_critical_condition(test::flat_instance(5, 3.0, 10.0, 50.0));
        CHECK(cc.index_set.empty());
        CHECK(cc.holds());
    }

    TEST_CASE("critical-speed bracket in the small-step limit")
    {
        const ProblemInstance instance = test::flat_instance(3, 1e-7, 10.0);
        const VehicleParams &v = instance.vehicle;
        const CriticalCondition cc = check_critical_condition(instance);
        REQUIRE_FALSE(cc.brackets.empty());
        const double limit =
            kGravity * v.friction - v.normalized_drag * cc.critical_speed - kGravity * v.rolling_coeff;
        CHECK(cc.brackets[0] == doctest::Approx(limit).epsilon(1e-5));
    }

    TEST_CASE("posterior gap of an exact point is zero")
    {
        const ExtractedSolution ex = cruise_point(test::flat_instance(5, 3.0, 400.0), 400.0);
        const GapReport g = gap_report(ex);
        CHECK(g.gap == 0.0);
        CHECK(g.violating.empty());
        CHECK_FALSE(g.last_violating);
        CHECK(posterior_gap(ex) == 0.0);
    }

    TEST_CASE("posterior gap rejects nonpositive speeds")
    {
        ExtractedSolution ex = cruise_point(test::flat_instance(3, 3.0, 400.0), 400.0);
        ex.w[1] = 0.0;
        CHECK_THROWS_AS(posterior_gap(ex), Error);
    }

    TEST_CASE("benchmark relaxation is exact and recovers a feasible solution")
    {
        const ProblemInstance instance = benchmark_path_instance(fiat500(), 0.0);
        const ExtractedSolution ex = solve_extract(instance);
        CHECK(posterior_gap(ex) <= 6.9e-7);
        const Recovery r = recover_nonconvex(instance, ex);
        REQUIRE(std::holds_alternative<RecoveredSolution>(r));
        const RecoveredSolution &rec = std::get<RecoveredSolution>(r);
        CHECK(rec.feasibility.power <= 1e-5);
        CHECK(rec.feasibility.feasible);
        CHECK(rec.solution.time == doctest::Approx(ex.objective).epsilon(1e-8));

        const ExactnessReport report = exactness_report(instance, ex);
        CHECK(report.a_priori);
        CHECK(report.certified_exact);
        CHECK(report.clause == Certification::APriori);
    }

    TEST_CASE("counterexample relaxation is not exact")
    {
        const ProblemInstance instance = counterexample_instance();
        const ExtractedSolution ex = solve_extract(instance);
        const Recovery r = recover_nonconvex(instance, ex);
        REQUIRE(std::holds_alternative<NotExact>(r));
        const NotExact &ne = std::get<NotExact>(r);
        CHECK(ne.gap > 1e-2);
        REQUIRE_FALSE(ne.steps.empty());
        CHECK(ne.power_active);
        CHECK(ne.traction_bounded);
        CHECK(ne.residuals.size() == ne.steps.size());

        const ExactnessReport report = exactness_report(instance, ex);
        CHECK_FALSE(report.a_priori);
        CHECK_FALSE(report.certified_exact);
        CHECK(report.clause == Certification::None);
        REQUIRE(report.posterior);
        CHECK(report.posterior->last_violating);
    }

    TEST_CASE("an exact feasible point is returned unchanged")
    {
        const ProblemInstance instance = test::flat_instance(5, 3.0, 400.0);
        const ExtractedSolution ex = cruise_point(instance, 400.0);
        const Recovery r = recover_nonconvex(instance, ex);
        REQUIRE(std::holds_alternative<RecoveredSolution>(r));
        const SpeedSolution &s = std::get<RecoveredSolution>(r).solution;
        CHECK(s.w == ex.w);
        CHECK(s.t == ex.t);
        for (std::size_t i = 0; i < s.F.size(); ++i)
            CHECK(s.F[i] == doctest::Approx(instance.vehicle.mass * ex.f[i]));
        CHECK(std::get<RecoveredSolution>(r).feasibility.feasible);
    }

    TEST_CASE("JSON report carries the a-priori verdicts and the posterior gap")
    {
        const ProblemInstance instance = counterexample_instance();
        const nlohmann::json prior = to_json(exactness_report(instance));
        CHECK(prior["h_condition"]["holds"] == true);
        CHECK(prior["wmax_condition"]["holds"] == false);
        CHECK(prior["critical_condition"]["holds"] == false);
        CHECK(prior["posterior_gap"].is_null());
        CHECK(prior["certified_by"] == "none");

        const nlohmann::json post = to_json(exactness_report(instance, solve_extract(instance)));
        CHECK(post["posterior_gap"].get<double>() > 1e-2);
        CHECK(post["worst_step"].get<std::size_t>() >= 1);
        CHECK_FALSE(post["violating_steps"].empty());
    }
}
