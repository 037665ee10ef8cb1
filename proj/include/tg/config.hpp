#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tg {

// INI-style configuration: [section] headers, key = value lines, '#'/';'
// comments. Sections and keys are validated against a fixed schema; unknown
// names are rejected with the offending location.
class Config {
  public:
    static Config load(const std::string& path);
    static Config parse(const std::string& text, const std::string& origin = "<string>");

    // "section.key=value" command-line override; wins over the file.
    void apply_override(const std::string& spec);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    std::string require(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& section, const std::string& key,
                                    const std::vector<double>& fallback) const;
    std::vector<std::int64_t> get_ints(const std::string& section, const std::string& key,
                                       const std::vector<std::int64_t>& fallback) const;
    std::vector<std::string> get_strings(const std::string& section, const std::string& key) const;

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

  private:
    void set_checked(const std::string& section, const std::string& key, const std::string& value,
                     const std::string& where);
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

std::vector<double> parse_double_list(const std::string& text);

}  // namespace tg
