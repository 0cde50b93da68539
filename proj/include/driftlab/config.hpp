#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace driftlab {

/// Sectioned key-value configuration. Read from INI-style text
/// (`[section]`, `key = value`, `#`/`;` comments; numbers may be written a/b)
/// or from a JSON object of
/// objects. Accessors record type errors instead of throwing; `finish()`
/// raises one ConfigInvalid listing every problem, including unknown keys.
class Config {
public:
    using Sections = std::map<std::string, std::map<std::string, std::string>>;

    Config() = default;
    explicit Config(Sections s) : data_(std::move(s)) {}

    static Config from_file(const std::string& path);
    static Config from_ini(const std::string& text);
    static Config from_json(const nlohmann::json& j);

    const Sections& sections() const noexcept { return data_; }
    bool has(const std::string& section, const std::string& key) const;
    bool has_section(const std::string& section) const;
    void set(const std::string& section, const std::string& key, const std::string& value);

    std::string str(const std::string& section, const std::string& key, const std::string& def);
    std::optional<std::string> opt_str(const std::string& section, const std::string& key);
    double num(const std::string& section, const std::string& key, double def);
    std::optional<double> opt_num(const std::string& section, const std::string& key);
    long long integer(const std::string& section, const std::string& key, long long def);
    bool flag(const std::string& section, const std::string& key, bool def);
    std::vector<double> list(const std::string& section, const std::string& key, const std::vector<double>& def);
    /// Keys of a section not yet read, for free-form parameter maps.
    std::map<std::string, std::string> rest(const std::string& section);

    /// Adds a field-level error.
    void error(const std::string& section, const std::string& key, const std::string& msg);
    /// Throws ConfigInvalid if any accessor failed or any key was never read.
    void finish() const;

    /// Canonical JSON echo (sections -> keys -> string values).
    nlohmann::json to_json() const;
    /// Canonical INI text.
    std::string to_ini() const;

private:
    Sections data_;
    std::set<std::pair<std::string, std::string>> used_;
    std::vector<std::string> errors_;

    const std::string* find(const std::string& section, const std::string& key);
};

/// Budget caps; environment variables DRIFTLAB_MAX_PATHS,
/// DRIFTLAB_MAX_QUAD_LEVEL and DRIFTLAB_WALL_CLOCK override config values.
struct Budget {
    std::size_t max_paths = 2'000'000;
    int max_quad_level = 6;
    double wall_clock_seconds = 3600.0;
};

Budget read_budget(Config& cfg);

}  // namespace driftlab
