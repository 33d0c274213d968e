#pragma once

#include <string>

#include <json.hpp>

#include "veloplan/model.hpp"

namespace veloplan
{

inline constexpr const char *kInstanceSchema = "velo-plan/1";

/// {schema, vehicle:{M,P_max,eta,c,Gamma,mu}, path:{h,slope_sin,w_max}, lambda, w_init}
nlohmann::json instance_to_json(const ProblemInstance &instance);

/// Throws MalformedInput on missing fields or a wrong schema tag.
ProblemInstance instance_from_json(const nlohmann::json &doc);

ProblemInstance load_instance(const std::string &path);
void save_instance(const ProblemInstance &instance, const std::string &path);

/// Stable 64-bit FNV-1a digest of the canonical JSON serialization, as hex.
std::string instance_hash(const ProblemInstance &instance);

} // namespace veloplan
