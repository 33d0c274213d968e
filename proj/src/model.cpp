#include "veloplan/model.hpp"

#include <cmath>
#include <sstream>

#include "veloplan/error.hpp"

namespace veloplan
{

const char *to_string(ErrorCode code)
{
    switch (code)
    {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::NoSolution: return "NoSolution";
    case ErrorCode::SingularSpeed: return "SingularSpeed";
    }
    return "Unknown";
}

const char *to_string(SolverStatus status)
{
    switch (status)
    {
    case SolverStatus::Optimal: return "Optimal";
    case SolverStatus::Infeasible: return "Infeasible";
    case SolverStatus::MaxIter: return "MaxIter";
    case SolverStatus::NumericalFailure: return "NumericalFailure";
    }
    return "Unknown";
}

VehicleParams VehicleParams::make(double mass, double max_power, double regen_fraction,
                                  double rolling_coeff, double drag_coeff, double friction)
{
    VehicleParams v;
    v.mass = mass;
    v.max_power = max_power;
    v.regen_fraction = regen_fraction;
    v.rolling_coeff = rolling_coeff;
    v.drag_coeff = drag_coeff;
    v.normalized_drag = mass > 0.0 ? drag_coeff / mass : 0.0;
    v.friction = friction;
    return v;
}

double VehiclePreset::w_max_cap() const { return kmh_to_w(v_max_kmh); }

VehiclePreset fiat500(double friction)
{
    return {"fiat500", VehicleParams::make(967.0, 50750.0, 0.0, 0.007, 0.406, friction), 160.0};
}

VehiclePreset fiat500e(double friction)
{
    return {"fiat500e", VehicleParams::make(1365.0, 87000.0, 0.7, 0.007, 0.399, friction), 150.0};
}

VehiclePreset vehicle_preset(const std::string &name, double friction)
{
    if (name == "fiat500")
        return fiat500(friction);
    if (name == "fiat500e")
        return fiat500e(friction);
    throw Error(ErrorCode::InvalidParameter, "unknown vehicle preset '" + name + "'");
}

ValidationReport validate_vehicle(const VehicleParams &v)
{
    ValidationReport report;
    auto check = [&](bool ok, const char *what) {
        if (!ok)
            report.violations.emplace_back(what);
    };
    check(std::isfinite(v.mass) && v.mass > 0.0, "M > 0");
    check(std::isfinite(v.max_power) && v.max_power > 0.0, "P_max > 0");
    check(v.regen_fraction >= 0.0 && v.regen_fraction <= 1.0, "eta in [0,1]");
    check(std::isfinite(v.rolling_coeff) && v.rolling_coeff >= 0.0, "c >= 0");
    check(std::isfinite(v.drag_coeff) && v.drag_coeff >= 0.0, "Gamma >= 0");
    check(std::isfinite(v.friction) && v.friction > 0.0, "mu > 0");
    if (v.mass > 0.0)
    {
        const double expected = v.drag_coeff / v.mass;
        check(std::abs(v.normalized_drag - expected) <= 1e-12 * std::abs(v.normalized_drag),
              "gamma = Gamma / M");
    }
    return report;
}

ValidationReport validate_path(const PathProfile &p)
{
    ValidationReport report;
    const std::size_t n = p.points();
    if (!(std::isfinite(p.step) && p.step > 0.0))
        report.violations.emplace_back("h > 0");
    if (n < 2)
        report.violations.emplace_back("n >= 2");
    if (p.slope_sin.size() + 1 != n)
        report.violations.emplace_back("length(slope_sin) = n - 1");
    for (double s : p.slope_sin)
    {
        if (!(s >= -1.0 && s <= 1.0))
        {
            report.violations.emplace_back("sin alpha in [-1,1]");
            break;
        }
    }
    for (double w : p.w_max)
    {
        if (!(std::isfinite(w) && w > 0.0))
        {
            report.violations.emplace_back("w_max > 0");
            break;
        }
    }
    return report;
}

ValidationReport validate_instance(const ProblemInstance &instance)
{
    ValidationReport report = validate_vehicle(instance.vehicle);
    const ValidationReport path = validate_path(instance.path);
    report.violations.insert(report.violations.end(), path.violations.begin(),
                             path.violations.end());
    if (!(instance.lambda >= 0.0) || !std::isfinite(instance.lambda))
        report.violations.emplace_back("lambda >= 0");
    if (!(instance.w_init > 0.0) || !std::isfinite(instance.w_init))
        report.violations.emplace_back("w_init > 0");
    if (!instance.path.w_max.empty() && instance.w_init > instance.path.w_max.front())
        report.violations.emplace_back("w_init <= w_max_1");
    return report;
}

void require_valid(const ProblemInstance &instance)
{
    const ValidationReport report = validate_instance(instance);
    if (report.ok())
        return;
    std::ostringstream msg;
    msg << "invalid instance:";
    for (const auto &v : report.violations)
        msg << " [" << v << "]";
    throw Error(ErrorCode::InvalidParameter, msg.str());
}

double critical_speed(const VehicleParams &vehicle, std::optional<double> friction_override)
{
    const double mu = friction_override.value_or(vehicle.friction);
    if (!(mu > 0.0))
        throw Error(ErrorCode::InvalidParameter, "critical speed needs mu > 0");
    if (!(vehicle.mass > 0.0) || !(vehicle.max_power > 0.0))
        throw Error(ErrorCode::InvalidParameter, "critical speed needs M > 0 and P_max > 0");
    const double v = vehicle.max_power / (vehicle.mass * kGravity * mu);
    return v * v;
}

double speed_convert(double value, SpeedConversion direction)
{
    if (!(value >= 0.0))
        throw Error(ErrorCode::InvalidParameter, "speed_convert needs a non-negative value");
    switch (direction)
    {
    case SpeedConversion::KmhToW:
    {
        const double v = value / 3.6;
        return v * v;
    }
    case SpeedConversion::WToKmh:
        return 3.6 * std::sqrt(value);
    }
    return 0.0;
}

} // namespace veloplan
