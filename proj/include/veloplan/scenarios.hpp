#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "veloplan/model.hpp"

namespace veloplan
{

/// Initial squared speed used by every bundled scenario [m^2/s^2].
inline constexpr double kScenarioInitialW = 0.1;

struct ScenarioConfig
{
    std::uint64_t seed = 0;
    std::size_t n = 200;
    double h = 3.0;
    double incline_bound = 0.05;
    double knot_spacing = 100.0;  // incline spline knots [m]
    double section_length = 200.0; // w_max sections [m]
    std::vector<double> speed_menu = {30, 50, 70, 90, 110, 130}; // km/h, plus v_max
    std::size_t lambda_samples = 100;
    double lambda_min = 1e-7;
    double lambda_max = 1e-2;
    bool lambda_include_zero = true;
};

/// Throws InvalidParameter on an unusable configuration.
void validate_config(const ScenarioConfig &config);

/// {0} (optional) followed by `count` log-spaced values in [lo, hi].
std::vector<double> lambda_grid(std::size_t count, double lo, double hi, bool include_zero);

/// Under-powered Fiat 500 (12.5 kW, mu = 0.3) on a 200 m path whose middle
/// third climbs at 22.5 degrees; the relaxation of this instance is not exact.
/// Steps 1..66 and 134..199 are flat, steps 67..133 (1-based) climb.
ProblemInstance counterexample_instance();

/// 600 m test path: flat 100 m, +4% for 150 m, flat 100 m, -4% for 150 m,
/// flat 100 m; speed limits 70 / 90 / 30 km/h over 200 m sections, capped by
/// the vehicle top speed. Uses h = 600 / n.
ProblemInstance benchmark_path_instance(const VehiclePreset &vehicle, double lambda,
                                        std::size_t n = 200);

/// Altitude of the benchmark path at arc length s [m].
double benchmark_altitude(double s);

/// Seeded random instance: spline incline within +-incline_bound, three speed
/// sections drawn from the menu plus v_max, lambda drawn from the grid.
ProblemInstance random_instance(const ScenarioConfig &config, const VehiclePreset &vehicle);

/// Reads arc_length_m,elevation_m[,speed_limit_kmh] (header row required),
/// resamples to step h by linear interpolation and converts grades to sines.
/// Throws MalformedInput on fewer than two rows or non-increasing arc length.
ProblemInstance load_elevation_csv(const std::string &path, double h, const VehicleParams &vehicle,
                                   double lambda, double w_max_default,
                                   double w_init = kScenarioInitialW);

/// Grade (rise over run) to sine of the slope angle.
double grade_to_sine(double grade);

} // namespace veloplan
