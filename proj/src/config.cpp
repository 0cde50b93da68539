#include "driftlab/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "driftlab/errors.hpp"

namespace driftlab {

namespace {

std::string scalar_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) {
        std::ostringstream os;
        os.precision(17);
        os << v.get<double>();
        return os.str();
    }
    return v.dump();
}

bool parse_double(const std::string& s, double& out) {
    const std::string t = boost::algorithm::trim_copy(s);
    if (t == "inf" || t == "infinity" || t == "Inf") {
        out = std::numeric_limits<double>::infinity();
        return true;
    }
    if (t.empty()) return false;
    if (const auto slash = t.find('/'); slash != std::string::npos) {
        double a = 0.0, b = 0.0;
        if (!parse_double(t.substr(0, slash), a) || !parse_double(t.substr(slash + 1), b) || b == 0.0) return false;
        out = a / b;
        return true;
    }
    char* end = nullptr;
    errno = 0;
    out = std::strtod(t.c_str(), &end);
    return errno == 0 && end && *end == '\0';
}

}  // namespace

Config Config::from_ini(const std::string& text) {
    boost::property_tree::ptree pt;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        fail(ErrorKind::ConfigInvalid, std::string("line ") + std::to_string(e.line()) + ": " + e.message());
    }
    Sections s;
    for (const auto& [sec, sub] : pt) {
        if (sub.empty()) fail(ErrorKind::ConfigInvalid, "key '" + sec + "' outside of a section");
        for (const auto& [k, v] : sub) s[sec][k] = boost::algorithm::trim_copy(v.get_value<std::string>());
    }
    return Config(std::move(s));
}

Config Config::from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorKind::ConfigInvalid, "JSON config must be an object of sections");
    Sections s;
    for (const auto& [sec, sub] : j.items()) {
        if (!sub.is_object()) fail(ErrorKind::ConfigInvalid, "section '" + sec + "' must be an object");
        for (const auto& [k, v] : sub.items()) {
            if (v.is_array()) {
                std::string joined;
                for (std::size_t i = 0; i < v.size(); ++i) joined += (i ? "," : "") + scalar_text(v[i]);
                s[sec][k] = joined;
            } else if (v.is_object()) {
                fail(ErrorKind::ConfigInvalid, sec + "." + k + ": nested objects are not supported");
            } else {
                s[sec][k] = scalar_text(v);
            }
        }
    }
    return Config(std::move(s));
}

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::ConfigInvalid, "cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (boost::algorithm::ends_with(path, ".json")) {
        try {
            return from_json(nlohmann::json::parse(text));
        } catch (const nlohmann::json::parse_error& e) {
            fail(ErrorKind::ConfigInvalid, path + ": " + e.what());
        }
    }
    return from_ini(text);
}

bool Config::has(const std::string& section, const std::string& key) const {
    auto it = data_.find(section);
    return it != data_.end() && it->second.count(key) > 0;
}

bool Config::has_section(const std::string& section) const { return data_.count(section) > 0; }

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    data_[section][key] = value;
}

const std::string* Config::find(const std::string& section, const std::string& key) {
    auto it = data_.find(section);
    if (it == data_.end()) return nullptr;
    auto kt = it->second.find(key);
    if (kt == it->second.end()) return nullptr;
    used_.insert({section, key});
    return &kt->second;
}

void Config::error(const std::string& section, const std::string& key, const std::string& msg) {
    errors_.push_back(section + "." + key + ": " + msg);
}

std::string Config::str(const std::string& section, const std::string& key, const std::string& def) {
    const auto* v = find(section, key);
    return v ? *v : def;
}

std::optional<std::string> Config::opt_str(const std::string& section, const std::string& key) {
    const auto* v = find(section, key);
    if (!v) return std::nullopt;
    return *v;
}

double Config::num(const std::string& section, const std::string& key, double def) {
    return opt_num(section, key).value_or(def);
}

std::optional<double> Config::opt_num(const std::string& section, const std::string& key) {
    const auto* v = find(section, key);
    if (!v) return std::nullopt;
    double out = 0.0;
    if (!parse_double(*v, out)) {
        error(section, key, "expected a number, got '" + *v + "'");
        return std::nullopt;
    }
    return out;
}

long long Config::integer(const std::string& section, const std::string& key, long long def) {
    const auto v = opt_num(section, key);
    if (!v) return def;
    if (*v != std::floor(*v) || std::abs(*v) > 9.0e15) {
        error(section, key, "expected an integer");
        return def;
    }
    return static_cast<long long>(*v);
}

bool Config::flag(const std::string& section, const std::string& key, bool def) {
    const auto* v = find(section, key);
    if (!v) return def;
    const std::string t = boost::algorithm::to_lower_copy(*v);
    if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
    if (t == "false" || t == "no" || t == "0" || t == "off") return false;
    error(section, key, "expected a boolean, got '" + *v + "'");
    return def;
}

std::vector<double> Config::list(const std::string& section, const std::string& key, const std::vector<double>& def) {
    const auto* v = find(section, key);
    if (!v) return def;
    std::vector<std::string> parts;
    boost::algorithm::split(parts, *v, boost::is_any_of(", "), boost::token_compress_on);
    std::vector<double> out;
    for (const auto& p : parts) {
        if (boost::algorithm::trim_copy(p).empty()) continue;
        double x = 0.0;
        if (!parse_double(p, x)) {
            error(section, key, "expected a comma-separated list of numbers, got '" + *v + "'");
            return def;
        }
        out.push_back(x);
    }
    return out;
}

std::map<std::string, std::string> Config::rest(const std::string& section) {
    std::map<std::string, std::string> out;
    auto it = data_.find(section);
    if (it == data_.end()) return out;
    for (const auto& [k, v] : it->second)
        if (!used_.count({section, k})) {
            out[k] = v;
            used_.insert({section, k});
        }
    return out;
}

void Config::finish() const {
    std::vector<std::string> all = errors_;
    for (const auto& [sec, keys] : data_)
        for (const auto& [k, v] : keys)
            if (!used_.count({sec, k})) all.push_back(sec + "." + k + ": unknown key for this experiment");
    if (all.empty()) return;
    std::string msg = std::to_string(all.size()) + " problem(s):";
    for (const auto& e : all) msg += "\n  " + e;
    fail(ErrorKind::ConfigInvalid, msg);
}

nlohmann::json Config::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [sec, keys] : data_)
        for (const auto& [k, v] : keys) j[sec][k] = v;
    return j;
}

std::string Config::to_ini() const {
    std::ostringstream os;
    for (const auto& [sec, keys] : data_) {
        os << '[' << sec << "]\n";
        for (const auto& [k, v] : keys) os << k << " = " << v << '\n';
        os << '\n';
    }
    return os.str();
}

Budget read_budget(Config& cfg) {
    Budget b;
    b.max_paths = static_cast<std::size_t>(cfg.integer("budget", "max_paths", static_cast<long long>(b.max_paths)));
    b.max_quad_level = static_cast<int>(cfg.integer("budget", "max_quad_level", b.max_quad_level));
    b.wall_clock_seconds = cfg.num("budget", "wall_clock_seconds", b.wall_clock_seconds);
    auto env = [](const char* name) -> std::optional<double> {
        const char* v = std::getenv(name);
        double x = 0.0;
        if (!v || !parse_double(v, x)) return std::nullopt;
        return x;
    };
    if (auto v = env("DRIFTLAB_MAX_PATHS")) b.max_paths = static_cast<std::size_t>(*v);
    if (auto v = env("DRIFTLAB_MAX_QUAD_LEVEL")) b.max_quad_level = static_cast<int>(*v);
    if (auto v = env("DRIFTLAB_WALL_CLOCK")) b.wall_clock_seconds = *v;
    if (b.max_paths == 0) cfg.error("budget", "max_paths", "must be positive");
    if (b.max_quad_level < 0) cfg.error("budget", "max_quad_level", "must be nonnegative");
    if (!(b.wall_clock_seconds > 0.0)) cfg.error("budget", "wall_clock_seconds", "must be positive");
    return b;
}

}  // namespace driftlab
