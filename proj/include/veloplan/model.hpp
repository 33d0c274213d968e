#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace veloplan
{

inline constexpr double kGravity = 9.81;
/// Longitudinal vehicle data. `normalized_drag` duplicates drag_coeff / mass;
/// `validate_vehicle` cross-checks the two.
struct VehicleParams
{
    double mass = 0.0;           // M [kg]
    double max_power = 0.0;      // P_max [W]
    double regen_fraction = 0.0; // eta, share of braking energy recovered
    double rolling_coeff = 0.0;  // c
    double drag_coeff = 0.0;     // Gamma [kg/m]
    double normalized_drag = 0.0; // gamma [1/m]
    double friction = 0.0;       // mu

    /// Builds a consistent parameter set, deriving gamma from Gamma and M.
    static VehicleParams make(double mass, double max_power, double regen_fraction,
                              double rolling_coeff, double drag_coeff, double friction);
};

/// Named vehicle with its top-speed cap (used as a w_max ceiling by scenarios).
struct VehiclePreset
{
    std::string name;
    VehicleParams params;
    double v_max_kmh = 0.0;

    double w_max_cap() const;
};

VehiclePreset fiat500(double friction = 0.7);
VehiclePreset fiat500e(double friction = 0.7);
/// Looks up "fiat500" / "fiat500e"; throws InvalidParameter otherwise.
VehiclePreset vehicle_preset(const std::string &name, double friction = 0.7);

/// Uniform-step discretization of the path: n points, n-1 steps.
struct PathProfile
{
    double step = 0.0;              // h [m]
    std::vector<double> slope_sin;  // sin(alpha_i), one per step
    std::vector<double> w_max;      // max squared speed, one per point

    std::size_t points() const { return w_max.size(); }
    std::size_t steps() const { return w_max.empty() ? 0 : w_max.size() - 1; }
    double length() const { return step * static_cast<double>(steps()); }
};

struct ProblemInstance
{
    VehicleParams vehicle;
    PathProfile path;
    double lambda = 0.0; // [s/J]
    double w_init = 0.0; // [m^2/s^2]
};

enum class SolverStatus
{
    Optimal,
    Infeasible,
    MaxIter,
    NumericalFailure,
};

const char *to_string(SolverStatus status);

struct SpeedSolution
{
    std::vector<double> w; // n
    std::vector<double> F; // n-1 [N]
    std::vector<double> t; // n-1 [s/m]
    double energy = 0.0;
    double time = 0.0;
    double weighted_objective = 0.0;
    double exactness_gap = 0.0;
    SolverStatus solver_status = SolverStatus::Optimal;
};

struct ValidationReport
{
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
};

ValidationReport validate_vehicle(const VehicleParams &vehicle);
ValidationReport validate_path(const PathProfile &path);
ValidationReport validate_instance(const ProblemInstance &instance);

/// Throws InvalidParameter listing every violation if the instance is invalid.
void require_valid(const ProblemInstance &instance);

/// Squared speed at which the traction limit g*mu and the power limit
/// P_max / (M sqrt(w)) coincide.
double critical_speed(const VehicleParams &vehicle,
                      std::optional<double> friction_override = std::nullopt);

enum class SpeedConversion
{
    KmhToW,
    WToKmh,
};

double speed_convert(double value, SpeedConversion direction);

inline double kmh_to_w(double kmh) { return speed_convert(kmh, SpeedConversion::KmhToW); }
inline double w_to_kmh(double w) { return speed_convert(w, SpeedConversion::WToKmh); }

} // namespace veloplan
