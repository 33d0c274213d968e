#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "veloplan/dynamics.hpp"
#include "veloplan/formulation.hpp"
#include "veloplan/model.hpp"

namespace veloplan
{

inline constexpr double kDefaultGapThreshold = 1e-6; // s/m

enum class Verdict
{
    Holds,
    Fails,
    Undefined,
};

const char *to_string(Verdict verdict);

/// Step-length condition
///   (1 - h gamma) wbar - h g (1 + c) > (P h / (2 M (lambda gamma P h + 1 - lambda)))^(2/3).
/// `rhs_without_lambda` evaluates the same bound with denominator
/// (lambda gamma P h + 1); `forms_disagree` is set when the two verdicts differ.
struct HCondition
{
    Verdict verdict = Verdict::Undefined;
    double lhs = 0.0;
    double rhs = 0.0;
    std::optional<double> rhs_without_lambda;
    bool forms_disagree = false;
    std::string note;

    bool holds() const { return verdict == Verdict::Holds; }
};

/// margins[i] = P/(M sqrt(w_max_i)) - gamma w_max_i - g (sin alpha_i + c),
/// one per step.
struct WmaxCondition
{
    bool holds = false;
    std::vector<double> margins;
    std::optional<std::size_t> worst_step;
};

/// Bracket over the steps whose speed limit exceeds the critical speed.
struct CriticalCondition
{
    Verdict verdict = Verdict::Undefined;
    double critical_speed = 0.0;
    std::vector<std::size_t> index_set; // 0-based points with w_max_i > wbar
    std::vector<std::size_t> bracket_steps;
    std::vector<double> brackets;
    std::string note;

    bool holds() const { return verdict == Verdict::Holds; }
};

HCondition check_h_condition(const ProblemInstance &instance);
WmaxCondition check_wmax_condition(const ProblemInstance &instance);
CriticalCondition check_critical_condition(const ProblemInstance &instance);

struct GapReport
{
    double gap = 0.0;                      // max_i |t_i - 1/sqrt(w_i)|
    std::size_t worst_step = 0;            // argmax of the above
    std::vector<std::size_t> violating;    // steps with t_i - 1/sqrt(w_i) > threshold
    std::optional<std::size_t> last_violating;
};

/// Throws SingularSpeed if some w_i <= 0 on a step.
double posterior_gap(const ExtractedSolution &solution);
GapReport gap_report(const ExtractedSolution &solution,
                     double threshold = kDefaultGapThreshold);

struct NotExact
{
    double gap = 0.0;
    std::vector<std::size_t> steps;    // offending steps, 0-based
    std::vector<double> residuals;     // t_i - 1/sqrt(w_i) on those steps
    bool traction_bounded = true;      // f_i <= g mu on every offending step
    bool power_active = true;          // M f_i / P > 1/sqrt(w_i) on every offending step
    bool decelerating = true;          // sqrt(w_i) > sqrt(w_{i+1}) on every offending step
};

struct RecoveredSolution
{
    SpeedSolution solution;
    FeasibilityReport feasibility;
    ObjectiveBreakdown objective;
};

using Recovery = std::variant<RecoveredSolution, NotExact>;

/// Maps an extracted relaxation solution back to the original problem when
/// its posterior gap is within `threshold`: t_i = 1/sqrt(w_i), F_i = M f_i.
Recovery recover_nonconvex(const ProblemInstance &instance, const ExtractedSolution &solution,
                           double threshold = kDefaultGapThreshold);

enum class Certification
{
    APriori,
    APosteriori,
    None,
};

const char *to_string(Certification clause);

struct ExactnessReport
{
    HCondition h_condition;
    WmaxCondition wmax_condition;
    CriticalCondition critical_condition;
    std::optional<GapReport> posterior;
    double gap_threshold = kDefaultGapThreshold;
    bool a_priori = false;
    bool certified_exact = false;
    Certification clause = Certification::None;
};

/// A-priori conditions only.
ExactnessReport exactness_report(const ProblemInstance &instance);
/// A-priori conditions plus the posterior gap of a solved relaxation.
ExactnessReport exactness_report(const ProblemInstance &instance,
                                 const ExtractedSolution &solution,
                                 double threshold = kDefaultGapThreshold);

nlohmann::json to_json(const ExactnessReport &report);

} // namespace veloplan
