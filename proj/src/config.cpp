#include "chiralpb/config.hpp"

#include <fstream>
#include <set>

namespace chiralpb {

std::string to_string(Units u)
{
    return u == Units::Kappa ? "kappa" : "kappa_r";
}

Units units_from_string(const std::string& s)
{
    if (s == "kappa_r") return Units::KappaR;
    if (s == "kappa") return Units::Kappa;
    throw InvalidSpec("unknown units '" + s + "' (expected kappa_r or kappa)");
}

json spec_to_json(const SystemSpec& spec, Units units)
{
    json j;
    j["n_cells"] = spec.n_cells;
    j["cavity_freq"] = spec.cavity_freq;
    j["atom_freq"] = spec.atom_freq;
    j["coupling_g"] = spec.coupling_g;
    j["kappa_r"] = spec.kappa_r;
    j["kappa_l"] = spec.kappa_l;
    j["hop_phase"] = spec.hop_phase;
    j["atom_loss"] = spec.atom_loss;
    j["cavity_loss"] = spec.cavity_loss;
    j["kind"] = to_string(spec.kind);
    j["cavity_detune_disorder"] = spec.cavity_detune_disorder;
    j["atom_detune_disorder"] = spec.atom_detune_disorder;
    j["units"] = to_string(units);
    return j;
}

SpecDocument spec_from_json(const json& doc)
{
    static const std::set<std::string> known = {
        "n_cells",     "cavity_freq", "atom_freq", "coupling_g", "kappa_r",
        "kappa_l",     "hop_phase",   "atom_loss", "cavity_loss", "kind",
        "cavity_detune_disorder", "atom_detune_disorder", "units"};
    if (!doc.is_object()) throw InvalidSpec("config must be a JSON object");
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (!known.count(it.key())) throw InvalidSpec("unknown config key '" + it.key() + "'");

    SpecDocument out;
    SystemSpec& s = out.spec;
    try {
        auto num = [&](const char* key, double& dst) {
            if (doc.contains(key)) dst = doc.at(key).get<double>();
        };
        if (doc.contains("n_cells")) s.n_cells = doc.at("n_cells").get<int>();
        num("cavity_freq", s.cavity_freq);
        num("atom_freq", s.atom_freq);
        num("coupling_g", s.coupling_g);
        num("kappa_r", s.kappa_r);
        num("kappa_l", s.kappa_l);
        num("hop_phase", s.hop_phase);
        num("atom_loss", s.atom_loss);
        num("cavity_loss", s.cavity_loss);
        if (doc.contains("kind")) s.kind = kind_from_string(doc.at("kind").get<std::string>());
        if (doc.contains("cavity_detune_disorder"))
            s.cavity_detune_disorder = doc.at("cavity_detune_disorder").get<std::vector<double>>();
        if (doc.contains("atom_detune_disorder"))
            s.atom_detune_disorder = doc.at("atom_detune_disorder").get<std::vector<double>>();
        if (doc.contains("units")) out.units = units_from_string(doc.at("units").get<std::string>());
    } catch (const json::exception& e) {
        throw InvalidSpec(std::string("malformed config: ") + e.what());
    }
    out.spec = validate_spec(s);
    return out;
}

SpecDocument load_spec_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InvalidSpec("cannot open config '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidSpec("malformed config '" + path + "': " + e.what());
    }
    return spec_from_json(doc);
}

}  // namespace chiralpb
