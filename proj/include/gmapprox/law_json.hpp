#pragma once

#include <string>

#include "gmapprox/laws.hpp"
#include "json.hpp"

namespace gmapprox {

nlohmann::json law_to_json(const MixingLaw& law);
MixingLaw law_from_json(const nlohmann::json& j);

nlohmann::json atomic_to_json(const AtomicLaw& a);
AtomicLaw atomic_from_json(const nlohmann::json& j);

// Shortest round-trip decimal form of a double ("%.17g" fallback).
std::string format_double(double v);

}  // namespace gmapprox
