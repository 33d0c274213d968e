#include "veloplan/scenarios.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

#include "veloplan/error.hpp"

namespace veloplan
{

namespace
{

constexpr double kPi = 3.14159265358979323846;

/// Uniform [0,1) from the top 53 bits, identical on every platform.
double uniform01(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64 &rng, std::size_t count)
{
    return std::min(count - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(count)));
}

} // namespace

void validate_config(const ScenarioConfig &c)
{
    auto fail = [](const char *what) { throw Error(ErrorCode::InvalidParameter, what); };
    if (c.n < 2)
        fail("scenario needs n >= 2");
    if (!(c.h > 0.0))
        fail("scenario needs h > 0");
    if (!(c.incline_bound >= 0.0 && c.incline_bound < 1.0))
        fail("incline_bound must lie in [0,1)");
    if (c.speed_menu.empty())
        fail("speed_menu must be nonempty");
    for (double v : c.speed_menu)
        if (!(v > 0.0))
            fail("speed_menu entries must be positive");
    if (!(c.knot_spacing > 0.0) || !(c.section_length > 0.0))
        fail("knot spacing and section length must be positive");
    if (c.lambda_samples == 0 && !c.lambda_include_zero)
        fail("lambda grid is empty");
    if (c.lambda_samples > 0 && !(c.lambda_min > 0.0 && c.lambda_max >= c.lambda_min))
        fail("lambda range must satisfy 0 < lambda_min <= lambda_max");
}

std::vector<double> lambda_grid(std::size_t count, double lo, double hi, bool include_zero)
{
    std::vector<double> grid;
    if (include_zero)
        grid.push_back(0.0);
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t k = 0; k < count; ++k)
    {
        const double frac = count > 1 ? static_cast<double>(k) / static_cast<double>(count - 1) : 0.0;
        grid.push_back(k + 1 == count ? hi : std::pow(10.0, a + frac * (b - a)));
    }
    return grid;
}

ProblemInstance counterexample_instance()
{
    ProblemInstance instance;
    VehiclePreset car = fiat500(0.3);
    car.params.max_power = 12500.0;
    instance.vehicle = car.params;
    instance.lambda = 0.0;
    instance.w_init = kScenarioInitialW;

    const std::size_t n = 200;
    instance.path.step = 1.0;
    instance.path.w_max.assign(n, 1975.0);
    instance.path.slope_sin.assign(n - 1, 0.0);
    const double incline = std::sin(22.5 * kPi / 180.0);
    for (std::size_t step = 67; step <= 133; ++step)
        instance.path.slope_sin[step - 1] = incline;
    return instance;
}

double benchmark_altitude(double s)
{
    if (s <= 100.0)
        return 0.0;
    if (s <= 250.0)
        return 0.04 * (s - 100.0);
    if (s <= 350.0)
        return 6.0;
    if (s <= 500.0)
        return 6.0 - 0.04 * (s - 350.0);
    return 0.0;
}

ProblemInstance benchmark_path_instance(const VehiclePreset &vehicle, double lambda, std::size_t n)
{
    if (n < 2)
        throw Error(ErrorCode::InvalidParameter, "benchmark path needs n >= 2");
    ProblemInstance instance;
    instance.vehicle = vehicle.params;
    instance.lambda = lambda;
    instance.w_init = kScenarioInitialW;

    const double h = 600.0 / static_cast<double>(n);
    const double cap = vehicle.w_max_cap();
    instance.path.step = h;
    instance.path.w_max.resize(n);
    instance.path.slope_sin.resize(n - 1);
    for (std::size_t i = 0; i < n; ++i)
    {
        const double s = static_cast<double>(i) * h;
        const double limit_kmh = s < 200.0 ? 70.0 : (s < 400.0 ? 90.0 : 30.0);
        instance.path.w_max[i] = std::min(kmh_to_w(limit_kmh), cap);
        if (i + 1 < n)
            instance.path.slope_sin[i] = (benchmark_altitude(s + h) - benchmark_altitude(s)) / h;
    }
    return instance;
}

ProblemInstance random_instance(const ScenarioConfig &config, const VehiclePreset &vehicle)
{
    validate_config(config);
    std::mt19937_64 rng(config.seed);
    const std::size_t n = config.n;
    const double h = config.h;
    const double span = static_cast<double>(n) * h;

    const auto knots = static_cast<std::size_t>(std::ceil(span / config.knot_spacing)) + 1;
    std::vector<double> knot_values(std::max<std::size_t>(knots, 3));
    for (double &k : knot_values)
        k = config.incline_bound * (2.0 * uniform01(rng) - 1.0);
    const boost::math::interpolators::cardinal_cubic_b_spline<double> spline(
        knot_values.begin(), knot_values.end(), 0.0, config.knot_spacing);

    std::vector<double> section_w(3);
    const double cap = vehicle.w_max_cap();
    for (double &w : section_w)
    {
        const std::size_t pick = uniform_index(rng, config.speed_menu.size() + 1);
        const double kmh = pick < config.speed_menu.size() ? config.speed_menu[pick] : vehicle.v_max_kmh;
        w = std::min(kmh_to_w(kmh), cap);
    }

    const std::vector<double> lambdas = lambda_grid(config.lambda_samples, config.lambda_min,
                                                    config.lambda_max, config.lambda_include_zero);
    ProblemInstance instance;
    instance.vehicle = vehicle.params;
    instance.lambda = lambdas[uniform_index(rng, lambdas.size())];
    instance.w_init = kScenarioInitialW;
    instance.path.step = h;
    instance.path.w_max.resize(n);
    instance.path.slope_sin.resize(n - 1);
    for (std::size_t i = 0; i < n; ++i)
    {
        const double s = static_cast<double>(i) * h;
        const auto section = std::min<std::size_t>(2, static_cast<std::size_t>(s / config.section_length));
        instance.path.w_max[i] = section_w[section];
        if (i + 1 < n)
            instance.path.slope_sin[i] =
                std::clamp(spline(s + 0.5 * h), -config.incline_bound, config.incline_bound);
    }
    instance.w_init = std::min(instance.w_init, instance.path.w_max.front());
    return instance;
}

double grade_to_sine(double grade) { return grade / std::sqrt(1.0 + grade * grade); }

namespace
{

struct ElevationRow
{
    double s;
    double elevation;
    std::optional<double> limit_kmh;
};

std::optional<double> parse_number(std::string_view text)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t'))
        text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (text.empty())
        return std::nullopt;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw Error(ErrorCode::MalformedInput, "not a number: '" + std::string(text) + "'");
    return value;
}

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true)
    {
        const std::size_t comma = line.find(',', start);
        fields.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return fields;
}

} // namespace

ProblemInstance load_elevation_csv(const std::string &path, double h, const VehicleParams &vehicle,
                                   double lambda, double w_max_default, double w_init)
{
    if (!(h > 0.0))
        throw Error(ErrorCode::InvalidParameter, "resampling step must be positive");
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::MalformedInput, "cannot open '" + path + "'");

    std::vector<ElevationRow> rows;
    std::string line;
    bool header_seen = false;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        if (line.empty() || line == "\r")
            continue;
        if (!header_seen)
        {
            header_seen = true;
            if (line.find("arc_length_m") == std::string::npos)
                throw Error(ErrorCode::MalformedInput, "missing header row with arc_length_m");
            continue;
        }
        const auto fields = split(line);
        if (fields.size() < 2 || fields.size() > 3)
            throw Error(ErrorCode::MalformedInput,
                        "line " + std::to_string(line_no) + ": expected 2 or 3 columns");
        const auto s = parse_number(fields[0]);
        const auto z = parse_number(fields[1]);
        if (!s || !z)
            throw Error(ErrorCode::MalformedInput,
                        "line " + std::to_string(line_no) + ": empty arc length or elevation");
        ElevationRow row{*s, *z, std::nullopt};
        if (fields.size() == 3)
            row.limit_kmh = parse_number(fields[2]);
        if (!rows.empty() && !(row.s > rows.back().s))
            throw Error(ErrorCode::MalformedInput,
                        "line " + std::to_string(line_no) + ": arc length not increasing");
        rows.push_back(row);
    }
    if (rows.size() < 2)
        throw Error(ErrorCode::MalformedInput, "elevation profile needs at least two rows");

    const double s0 = rows.front().s;
    const double length = rows.back().s - s0;
    const auto n = static_cast<std::size_t>(std::floor(length / h + 1e-9)) + 1;
    if (n < 2)
        throw Error(ErrorCode::MalformedInput, "profile shorter than one resampling step");

    std::vector<double> elevation(n);
    ProblemInstance instance;
    instance.vehicle = vehicle;
    instance.lambda = lambda;
    instance.w_init = w_init;
    instance.path.step = h;
    instance.path.w_max.resize(n);
    instance.path.slope_sin.resize(n - 1);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < n; ++i)
    {
        const double s = std::min(s0 + static_cast<double>(i) * h, rows.back().s);
        while (seg + 2 < rows.size() && s > rows[seg + 1].s)
            ++seg;
        const ElevationRow &a = rows[seg];
        const ElevationRow &b = rows[seg + 1];
        const double frac = (s - a.s) / (b.s - a.s);
        elevation[i] = a.elevation + frac * (b.elevation - a.elevation);
        // Speed limits hold from their row up to the next one.
        const ElevationRow &owner = (s >= b.s) ? b : a;
        instance.path.w_max[i] = owner.limit_kmh ? kmh_to_w(*owner.limit_kmh) : w_max_default;
    }
    for (std::size_t i = 0; i + 1 < n; ++i)
        instance.path.slope_sin[i] =
            std::clamp(grade_to_sine((elevation[i + 1] - elevation[i]) / h), -1.0, 1.0);
    return instance;
}

} // namespace veloplan
