#pragma once

// Line-oriented `key = value` config files with `#` comments. Parsing is
// strict: malformed lines, duplicate keys, and (at schema application) unknown
// keys are all hard errors, so a config can never silently half-apply.

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pvrlab {

using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline ConfigMap parse_config_text(std::string_view text) {
  ConfigMap out;
  std::size_t at = 0;
  int lineno = 0;
  while (at <= text.size()) {
    std::size_t end = text.find('\n', at);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(at, end - at);
    at = end + 1;
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": duplicate key '" +
                                  key + "'");
  }
  return out;
}

}  // namespace pvrlab
