#include "veloplan/instance_io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>

#include "veloplan/error.hpp"

namespace veloplan
{

using nlohmann::json;

json instance_to_json(const ProblemInstance &instance)
{
    const VehicleParams &v = instance.vehicle;
    return json{
        {"schema", kInstanceSchema},
        {"vehicle",
         {{"M", v.mass},
          {"P_max", v.max_power},
          {"eta", v.regen_fraction},
          {"c", v.rolling_coeff},
          {"Gamma", v.drag_coeff},
          {"mu", v.friction}}},
        {"path",
         {{"h", instance.path.step},
          {"slope_sin", instance.path.slope_sin},
          {"w_max", instance.path.w_max}}},
        {"lambda", instance.lambda},
        {"w_init", instance.w_init},
    };
}

ProblemInstance instance_from_json(const json &doc)
{
    try
    {
        if (doc.contains("schema") && doc.at("schema").get<std::string>() != kInstanceSchema)
            throw Error(ErrorCode::MalformedInput,
                        "unsupported schema '" + doc.at("schema").get<std::string>() + "'");
        const json &v = doc.at("vehicle");
        ProblemInstance instance;
        instance.vehicle = VehicleParams::make(v.at("M").get<double>(), v.at("P_max").get<double>(),
                                               v.at("eta").get<double>(), v.at("c").get<double>(),
                                               v.at("Gamma").get<double>(), v.at("mu").get<double>());
        const json &p = doc.at("path");
        instance.path.step = p.at("h").get<double>();
        instance.path.slope_sin = p.at("slope_sin").get<std::vector<double>>();
        instance.path.w_max = p.at("w_max").get<std::vector<double>>();
        instance.lambda = doc.at("lambda").get<double>();
        instance.w_init = doc.at("w_init").get<double>();
        return instance;
    }
    catch (const json::exception &e)
    {
        throw Error(ErrorCode::MalformedInput, std::string("instance document: ") + e.what());
    }
}

ProblemInstance load_instance(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::MalformedInput, "cannot open instance file '" + path + "'");
    json doc;
    try
    {
        in >> doc;
    }
    catch (const json::exception &e)
    {
        throw Error(ErrorCode::MalformedInput, "'" + path + "': " + e.what());
    }
    return instance_from_json(doc);
}

void save_instance(const ProblemInstance &instance, const std::string &path)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::InvalidParameter, "cannot write '" + path + "'");
    out << instance_to_json(instance).dump(2) << '\n';
}

std::string instance_hash(const ProblemInstance &instance)
{
    const std::string text = instance_to_json(instance).dump();
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char ch : text)
    {
        hash ^= ch;
        hash *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

} // namespace veloplan
