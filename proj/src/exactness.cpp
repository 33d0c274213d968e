#include "veloplan/exactness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "veloplan/error.hpp"

namespace veloplan
{

const char *to_string(Verdict verdict)
{
    switch (verdict)
    {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    case Verdict::Undefined: return "undefined";
    }
    return "unknown";
}

const char *to_string(Certification clause)
{
    switch (clause)
    {
    case Certification::APriori: return "a_priori";
    case Certification::APosteriori: return "a_posteriori";
    case Certification::None: return "none";
    }
    return "unknown";
}

HCondition check_h_condition(const ProblemInstance &instance)
{
    require_valid(instance);
    const VehicleParams &v = instance.vehicle;
    const double h = instance.path.step;
    const double gamma = v.normalized_drag;
    const double lambda = instance.lambda;
    const double wbar = critical_speed(v);

    HCondition out;
    out.lhs = (1.0 - h * gamma) * wbar - h * kGravity * (1.0 + v.rolling_coeff);
    auto bound = [&](double denominator) {
        return std::cbrt(std::pow(v.max_power * h / (2.0 * v.mass * denominator), 2.0));
    };

    const double proof_denominator = lambda * gamma * v.max_power * h + 1.0;
    const double denominator = proof_denominator - lambda;
    out.rhs_without_lambda = bound(proof_denominator);
    if (!(denominator > 0.0))
    {
        out.verdict = Verdict::Undefined;
        out.rhs = std::numeric_limits<double>::quiet_NaN();
        out.note = "denominator lambda*gamma*P_max*h + 1 - lambda is not positive";
        return out;
    }
    out.rhs = bound(denominator);
    out.verdict = out.lhs > out.rhs ? Verdict::Holds : Verdict::Fails;
    out.forms_disagree = (out.lhs > out.rhs) != (out.lhs > *out.rhs_without_lambda);
    if (out.forms_disagree)
        out.note = "verdict changes when the bound uses lambda*gamma*P_max*h + 1";
    return out;
}

WmaxCondition check_wmax_condition(const ProblemInstance &instance)
{
    require_valid(instance);
    const VehicleParams &v = instance.vehicle;
    const PathProfile &path = instance.path;
    WmaxCondition out;
    out.margins.reserve(path.steps());
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < path.steps(); ++i)
    {
        const double w = path.w_max[i];
        const double available =
            w > 0.0 ? v.max_power / (v.mass * std::sqrt(w)) : std::numeric_limits<double>::infinity();
        const double margin =
            available - v.normalized_drag * w - kGravity * (path.slope_sin[i] + v.rolling_coeff);
        out.margins.push_back(margin);
        if (margin < worst)
        {
            worst = margin;
            out.worst_step = i;
        }
    }
    out.holds = std::all_of(out.margins.begin(), out.margins.end(),
                            [](double m) { return m >= 0.0; });
    return out;
}

CriticalCondition check_critical_condition(const ProblemInstance &instance)
{
    require_valid(instance);
    const VehicleParams &v = instance.vehicle;
    const PathProfile &path = instance.path;
    const double h = path.step;
    const double gamma = v.normalized_drag;

    CriticalCondition out;
    out.critical_speed = critical_speed(v);
    for (std::size_t i = 0; i < path.points(); ++i)
        if (path.w_max[i] > out.critical_speed)
            out.index_set.push_back(i);

    const double damping = 1.0 - h * gamma;
    if (!(damping > 0.0))
    {
        out.verdict = Verdict::Undefined;
        out.note = "h * gamma >= 1";
        return out;
    }
    bool all_nonnegative = true;
    for (std::size_t i : out.index_set)
    {
        if (i >= path.steps())
            continue;
        const double load = kGravity * (path.slope_sin[i] + v.rolling_coeff);
        const double reach = out.critical_speed + h * load;
        double bracket = -std::numeric_limits<double>::infinity();
        if (reach > 0.0)
            bracket = v.max_power / v.mass * std::sqrt(damping / reach) - gamma / damping * reach - load;
        out.bracket_steps.push_back(i);
        out.brackets.push_back(bracket);
        all_nonnegative = all_nonnegative && bracket >= 0.0;
    }
    out.verdict = all_nonnegative ? Verdict::Holds : Verdict::Fails;
    return out;
}

namespace
{

double time_residual(const ExtractedSolution &solution, std::size_t i)
{
    const double w = solution.w[i];
    if (!(w > 0.0))
        throw Error(ErrorCode::SingularSpeed,
                    "posterior gap undefined: w is not positive on step " + std::to_string(i + 1));
    return solution.t[i] - 1.0 / std::sqrt(w);
}

} // namespace

GapReport gap_report(const ExtractedSolution &solution, double threshold)
{
    if (solution.t.size() + 1 != solution.w.size())
        throw Error(ErrorCode::InvalidParameter, "gap_report: t must have n-1 entries");
    GapReport out;
    for (std::size_t i = 0; i < solution.t.size(); ++i)
    {
        const double r = time_residual(solution, i);
        if (std::abs(r) > out.gap)
        {
            out.gap = std::abs(r);
            out.worst_step = i;
        }
        if (r > threshold)
        {
            out.violating.push_back(i);
            out.last_violating = i;
        }
    }
    return out;
}

double posterior_gap(const ExtractedSolution &solution) { return gap_report(solution).gap; }

Recovery recover_nonconvex(const ProblemInstance &instance, const ExtractedSolution &solution,
                           double threshold)
{
    const GapReport gaps = gap_report(solution, threshold);
    const VehicleParams &v = instance.vehicle;
    if (gaps.gap > threshold)
    {
        NotExact out;
        out.gap = gaps.gap;
        for (std::size_t i = 0; i < solution.t.size(); ++i)
        {
            const double r = time_residual(solution, i);
            if (std::abs(r) <= threshold)
                continue;
            out.steps.push_back(i);
            out.residuals.push_back(r);
            const double f = solution.f[i];
            out.traction_bounded = out.traction_bounded && f <= kGravity * v.friction + 1e-9;
            out.power_active =
                out.power_active && v.mass * f / v.max_power > 1.0 / std::sqrt(solution.w[i]);
            out.decelerating = out.decelerating && solution.w[i] > solution.w[i + 1];
        }
        return out;
    }

    RecoveredSolution out;
    SpeedSolution &s = out.solution;
    s.w = solution.w;
    s.F.reserve(solution.f.size());
    for (double f : solution.f)
        s.F.push_back(v.mass * f);
    s.t.reserve(solution.t.size());
    for (std::size_t i = 0; i < solution.t.size(); ++i)
        s.t.push_back(1.0 / std::sqrt(solution.w[i]));
    out.objective = evaluate_objective(s.w, s.F, instance);
    out.feasibility = feasibility_check(s.w, s.F, instance);
    s.energy = out.objective.energy;
    s.time = out.objective.travel_time;
    s.weighted_objective = out.objective.weighted;
    s.exactness_gap = gaps.gap;
    s.solver_status = solution.status;
    return out;
}

namespace
{

void fill_a_priori(ExactnessReport &report, const ProblemInstance &instance)
{
    report.h_condition = check_h_condition(instance);
    report.wmax_condition = check_wmax_condition(instance);
    report.critical_condition = check_critical_condition(instance);
    report.a_priori = report.h_condition.holds() &&
                      (report.wmax_condition.holds || report.critical_condition.holds());
    if (report.a_priori)
    {
        report.certified_exact = true;
        report.clause = Certification::APriori;
    }
}

} // namespace

ExactnessReport exactness_report(const ProblemInstance &instance)
{
    ExactnessReport report;
    fill_a_priori(report, instance);
    return report;
}

ExactnessReport exactness_report(const ProblemInstance &instance, const ExtractedSolution &solution,
                                 double threshold)
{
    ExactnessReport report;
    report.gap_threshold = threshold;
    fill_a_priori(report, instance);
    report.posterior = gap_report(solution, threshold);
    if (!report.certified_exact && report.posterior->gap <= threshold)
    {
        report.certified_exact = true;
        report.clause = Certification::APosteriori;
    }
    return report;
}

namespace
{

nlohmann::json number_or_null(double x)
{
    return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

nlohmann::json one_based(const std::vector<std::size_t> &indices)
{
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i : indices)
        out.push_back(i + 1);
    return out;
}

nlohmann::json finite_array(const std::vector<double> &values)
{
    nlohmann::json out = nlohmann::json::array();
    for (double x : values)
        out.push_back(number_or_null(x));
    return out;
}

} // namespace

nlohmann::json to_json(const ExactnessReport &report)
{
    using nlohmann::json;
    const HCondition &hc = report.h_condition;
    json h_json = {{"holds", hc.holds()},
                   {"verdict", to_string(hc.verdict)},
                   {"lhs", number_or_null(hc.lhs)},
                   {"rhs", number_or_null(hc.rhs)},
                   {"rhs_without_lambda",
                    hc.rhs_without_lambda ? number_or_null(*hc.rhs_without_lambda) : json(nullptr)},
                   {"forms_disagree", hc.forms_disagree}};
    if (!hc.note.empty())
        h_json["note"] = hc.note;

    const WmaxCondition &wc = report.wmax_condition;
    json w_json = {{"holds", wc.holds}, {"margins", finite_array(wc.margins)}};
    w_json["worst_step"] = wc.worst_step ? json(*wc.worst_step + 1) : json(nullptr);

    const CriticalCondition &cc = report.critical_condition;
    json c_json = {{"holds", cc.holds()},
                   {"verdict", to_string(cc.verdict)},
                   {"critical_speed", cc.critical_speed},
                   {"index_set", one_based(cc.index_set)},
                   {"bracket_steps", one_based(cc.bracket_steps)},
                   {"brackets", finite_array(cc.brackets)}};
    if (!cc.note.empty())
        c_json["note"] = cc.note;

    json out = {{"h_condition", h_json},
                {"wmax_condition", w_json},
                {"critical_condition", c_json},
                {"a_priori_exact", report.a_priori},
                {"gap_threshold", report.gap_threshold},
                {"certified_exact", report.certified_exact},
                {"certified_by", to_string(report.clause)}};
    if (report.posterior)
    {
        const GapReport &g = *report.posterior;
        out["posterior_gap"] = g.gap;
        out["worst_step"] = g.worst_step + 1;
        out["violating_steps"] = one_based(g.violating);
        out["last_violating_step"] = g.last_violating ? json(*g.last_violating + 1) : json(nullptr);
    }
    else
    {
        out["posterior_gap"] = nullptr;
    }
    return out;
}

} // namespace veloplan
