#include "tg/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "tg/errors.hpp"

namespace tg {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"mesh",
         {"source", "element", "extents", "divisions", "file", "routing_cache"}},
        {"problem",
         {"kind", "diffusion", "source", "young", "nu", "plane_stress", "body_force",
          "dirichlet", "dirichlet_value", "seed"}},
        {"solver", {"tol_rel", "tol_abs", "max_iter", "direct_threshold", "perturb_k"}},
        {"time",
         {"scheme", "dt", "steps", "wave_speed", "alpha", "eps", "newton_tol",
          "newton_max_iter", "initial", "output_every"}},
        {"topopt",
         {"p", "e_max", "e_min", "nu", "vol_frac", "filter_radius", "move_limit", "iterations",
          "traction", "load_band", "snapshots", "plane_stress"}},
        {"output", {"dir", "prefix", "write_vtk", "write_fields"}},
        {"bench",
         {"element_counts", "batch_sizes", "repeats", "element"}},
    };
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

void Config::set_checked(const std::string& section, const std::string& key,
                         const std::string& value, const std::string& where) {
    const auto& sch = schema();
    const auto sit = sch.find(section);
    if (sit == sch.end()) throw InputError(where + ": unknown section [" + section + "]");
    if (sit->second.find(key) == sit->second.end())
        throw InputError(where + ": unknown key '" + key + "' in section [" + section + "]");
    sections_[section][key] = value;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

Config Config::parse(const std::string& text, const std::string& origin) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw InputError(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (schema().find(section) == schema().end())
                throw InputError(where + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw InputError(where + ": expected key = value");
        if (section.empty()) throw InputError(where + ": key outside any section");
        cfg.set_checked(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where);
    }
    return cfg;
}

void Config::apply_override(const std::string& spec) {
    const auto eq = spec.find('=');
    const auto dotpos = spec.find('.');
    if (eq == std::string::npos || dotpos == std::string::npos || dotpos > eq)
        throw InputError("override must look like section.key=value: " + spec);
    set_checked(trim(spec.substr(0, dotpos)), trim(spec.substr(dotpos + 1, eq - dotpos - 1)),
                trim(spec.substr(eq + 1)), "override '" + spec + "'");
}

bool Config::has(const std::string& section, const std::string& key) const {
    const auto sit = sections_.find(section);
    return sit != sections_.end() && sit->second.find(key) != sit->second.end();
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
    const auto sit = sections_.find(section);
    if (sit == sections_.end()) return fallback;
    const auto kit = sit->second.find(key);
    return kit == sit->second.end() ? fallback : kit->second;
}

std::string Config::require(const std::string& section, const std::string& key) const {
    if (!has(section, key))
        throw InputError("missing required config key " + section + "." + key);
    return get(section, key, "");
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    if (!has(section, key)) return fallback;
    const auto text = get(section, key, "");
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw InputError("config " + section + "." + key + ": not a number: " + text);
    }
    if (used != text.size())
        throw InputError("config " + section + "." + key + ": trailing characters: " + text);
    return v;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::int64_t fallback) const {
    if (!has(section, key)) return fallback;
    const auto text = get(section, key, "");
    std::size_t used = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(text, &used);
    } catch (const std::exception&) {
        throw InputError("config " + section + "." + key + ": not an integer: " + text);
    }
    if (used != text.size())
        throw InputError("config " + section + "." + key + ": trailing characters: " + text);
    return v;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    auto text = get(section, key, "");
    std::transform(text.begin(), text.end(), text.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw InputError("config " + section + "." + key + ": not a boolean: " + text);
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

std::vector<double> Config::get_doubles(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return parse_double_list(get(section, key, ""));
    } catch (const std::exception&) {
        throw InputError("config " + section + "." + key + ": expected a comma-separated list");
    }
}

std::vector<std::int64_t> Config::get_ints(const std::string& section, const std::string& key,
                                           const std::vector<std::int64_t>& fallback) const {
    if (!has(section, key)) return fallback;
    const auto vals = get_doubles(section, key, {});
    std::vector<std::int64_t> out(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) out[i] = static_cast<std::int64_t>(vals[i]);
    return out;
}

std::vector<std::string> Config::get_strings(const std::string& section,
                                             const std::string& key) const {
    std::vector<std::string> out;
    if (!has(section, key)) return out;
    std::istringstream in(get(section, key, ""));
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace tg
