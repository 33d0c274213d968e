#include <doctest.h>

#include <algorithm>

#include "test_support.hpp"
#include "veloplan/error.hpp"
#include "veloplan/instance_io.hpp"
#include "veloplan/model.hpp"
#include "veloplan/scenarios.hpp"

using namespace veloplan;

namespace
{

bool has_violation(const ValidationReport &report, const std::string &text)
{
    return std::find(report.violations.begin(), report.violations.end(), text) !=
           report.violations.end();
}

} // namespace

TEST_SUITE("model")
{
    TEST_CASE("critical speed of the reference vehicles")
    {
        CHECK(critical_speed(fiat500(0.7).params) == doctest::Approx(58.41).epsilon(2e-4));
        VehicleParams derated = VehicleParams::make(967.0, 12500.0, 0.0, 0.007, 0.406, 0.3);
        CHECK(critical_speed(derated) == doctest::Approx(19.29).epsilon(5e-4));
    }

    TEST_CASE("critical speed is one when P_max equals M g mu")
    {
        VehicleParams v = VehicleParams::make(1000.0, 1000.0 * kGravity * 0.5, 0.0, 0.01, 0.3, 0.5);
        CHECK(critical_speed(v) == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("friction override changes the critical speed")
    {
        const VehicleParams v = fiat500(0.7).params;
        CHECK(critical_speed(v, 0.3) > critical_speed(v));
        CHECK_THROWS_AS(critical_speed(v, 0.0), Error);
    }

    TEST_CASE("speed conversions")
    {
        CHECK(kmh_to_w(160.0) == doctest::Approx(1975.3).epsilon(5e-5));
        CHECK(kmh_to_w(0.0) == 0.0);
        CHECK(kmh_to_w(90.0) == doctest::Approx(625.0).epsilon(1e-12));
        CHECK(w_to_kmh(kmh_to_w(37.5)) == doctest::Approx(37.5).epsilon(1e-14));
        CHECK_THROWS_AS(kmh_to_w(-1.0), Error);
    }

    TEST_CASE("vehicle presets")
    {
        const VehiclePreset p = fiat500();
        CHECK(p.params.mass == 967.0);
        CHECK(p.params.max_power == 50750.0);
        CHECK(p.params.regen_fraction == 0.0);
        const VehiclePreset e = fiat500e();
        CHECK(e.params.mass == 1365.0);
        CHECK(e.params.regen_fraction == 0.7);
        CHECK(e.w_max_cap() == doctest::Approx(kmh_to_w(150.0)));
        CHECK(vehicle_preset("fiat500e").name == "fiat500e");
        CHECK_THROWS_AS(vehicle_preset("tesla"), Error);
    }

    TEST_CASE("benchmark instance validates cleanly")
    {
        const ProblemInstance instance = benchmark_path_instance(fiat500e(), 1e-4);
        CHECK(validate_instance(instance).ok());
        CHECK_NOTHROW(require_valid(instance));
    }

    TEST_CASE("validation reports zero initial speed")
    {
        ProblemInstance instance = benchmark_path_instance(fiat500(), 0.0);
        instance.w_init = 0.0;
        const ValidationReport report = validate_instance(instance);
        CHECK(has_violation(report, "w_init > 0"));
        CHECK_THROWS_AS(require_valid(instance), Error);
    }

    TEST_CASE("validation reports an out-of-range sine")
    {
        ProblemInstance instance = benchmark_path_instance(fiat500(), 0.0);
        instance.path.slope_sin[3] = 1.5;
        CHECK(has_violation(validate_instance(instance), "sin alpha in [-1,1]"));
    }

    TEST_CASE("validation cross-checks gamma against Gamma / M")
    {
        VehicleParams v = fiat500().params;
        v.normalized_drag *= 2.0;
        CHECK_FALSE(validate_vehicle(v).ok());
    }

    TEST_CASE("validation lists several problems at once")
    {
        ProblemInstance instance = test::flat_instance(3, 3.0, 10.0);
        instance.lambda = -1.0;
        instance.path.step = 0.0;
        const ValidationReport report = validate_instance(instance);
        CHECK(has_violation(report, "lambda >= 0"));
        CHECK(has_violation(report, "h > 0"));
    }
}

TEST_SUITE("model")
{
    TEST_CASE("instance JSON round trip preserves the hash")
    {
        const ProblemInstance instance = counterexample_instance();
        const ProblemInstance back = instance_from_json(instance_to_json(instance));
        CHECK(instance_hash(back) == instance_hash(instance));
        CHECK(back.path.slope_sin == instance.path.slope_sin);
        CHECK(back.vehicle.normalized_drag == instance.vehicle.normalized_drag);

        test::TempDir dir;
        save_instance(instance, dir.file("i.json"));
        CHECK(instance_hash(load_instance(dir.file("i.json"))) == instance_hash(instance));
    }

    TEST_CASE("different instances hash differently")
    {
        const ProblemInstance a = benchmark_path_instance(fiat500(), 0.0);
        const ProblemInstance b = benchmark_path_instance(fiat500(), 1e-6);
        CHECK(instance_hash(a) != instance_hash(b));
        CHECK(instance_hash(a).size() == 16);
    }

    TEST_CASE("malformed instance documents are rejected")
    {
        nlohmann::json doc = instance_to_json(test::flat_instance(3, 3.0, 10.0));
        CHECK(doc["schema"] == kInstanceSchema);
        nlohmann::json wrong = doc;
        wrong["schema"] = "velo-plan/0";
        CHECK_THROWS_AS(instance_from_json(wrong), Error);
        nlohmann::json missing = doc;
        missing.erase("path");
        CHECK_THROWS_AS(instance_from_json(missing), Error);

        test::TempDir dir;
        dir.write("bad.json", "{not json");
        try
        {
            load_instance(dir.file("bad.json"));
            FAIL("expected an exception");
        }
        catch (const Error &e)
        {
            CHECK(e.code() == ErrorCode::MalformedInput);
        }
        CHECK_THROWS_AS(load_instance(dir.file("absent.json")), Error);
    }
}
