#pragma once

#include <map>
#include <string>

namespace fuseforge {

/// Flat key=value config file: '#' comments, blank lines ignored, whitespace
/// trimmed around keys and values. Parse errors report line numbers.
std::map<std::string, std::string> read_config_file(const std::string& path);

double config_double(const std::map<std::string, std::string>& cfg, const std::string& key,
                     double fallback);
int config_int(const std::map<std::string, std::string>& cfg, const std::string& key,
               int fallback);

}  // namespace fuseforge
