#include "fuseforge/io/config.hpp"

#include <fstream>
#include <stdexcept>

#include "fuseforge/core/errors.hpp"

namespace fuseforge {

namespace {

std::string trim(const std::string& s) {
    const size_t first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const size_t last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::map<std::string, std::string> cfg;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw IoError(path + ":" + std::to_string(line_no) + ": expected key=value");
        }
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) {
            throw IoError(path + ":" + std::to_string(line_no) + ": empty key");
        }
        cfg[key] = trim(t.substr(eq + 1));
    }
    return cfg;
}

double config_double(const std::map<std::string, std::string>& cfg, const std::string& key,
                     double fallback) {
    const auto it = cfg.find(key);
    if (it == cfg.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw IoError("config key '" + key + "' is not a number: " + it->second);
    }
}

int config_int(const std::map<std::string, std::string>& cfg, const std::string& key,
               int fallback) {
    const auto it = cfg.find(key);
    if (it == cfg.end()) return fallback;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw IoError("config key '" + key + "' is not an integer: " + it->second);
    }
}

}  // namespace fuseforge
