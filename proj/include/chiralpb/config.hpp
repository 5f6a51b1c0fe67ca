#pragma once

#include "chiralpb/core_model.hpp"

#include "json.hpp"

#include <string>

namespace chiralpb {

using json = nlohmann::json;

enum class Units { KappaR, Kappa };

std::string to_string(Units u);
Units units_from_string(const std::string& s);

struct SpecDocument {
    SystemSpec spec;
    Units units = Units::KappaR;
};

// Keys are exactly the SystemSpec field names plus an optional "units".
json spec_to_json(const SystemSpec& spec, Units units = Units::KappaR);
SpecDocument spec_from_json(const json& doc);
SpecDocument load_spec_file(const std::string& path);

}  // namespace chiralpb
