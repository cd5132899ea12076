#pragma once

// Flat "section.key" view of a TOML-style config file (sections, key = value,
// quoted strings, numeric/string arrays, '#' comments).

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dse2qa/errors.hpp"
#include "dse2qa/text.hpp"

namespace dse2qa::config {

using KeyValues = std::map<std::string, std::string>;

inline std::string unquote(std::string_view v) {
  v = text::trim(v);
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\''))) {
    return std::string(v.substr(1, v.size() - 2));
  }
  return std::string(v);
}

namespace detail {

// Drops a trailing '#' comment that is outside quotes.
inline std::string strip_comment(const std::string& line) {
  bool dq = false, sq = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"' && !sq) dq = !dq;
    if (c == '\'' && !dq) sq = !sq;
    if (c == '#' && !dq && !sq) return line.substr(0, i);
  }
  return line;
}

inline void flatten(const boost::property_tree::ptree& pt, const std::string& prefix, KeyValues& out) {
  for (const auto& [k, child] : pt) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (child.empty()) {
      out[key] = unquote(child.data());
    } else {
      flatten(child, key, out);
    }
  }
}

}  // namespace detail

inline KeyValues parse(const std::string& content, const std::string& origin = "<config>") {
  std::istringstream in(content);
  std::ostringstream cleaned;
  std::string line;
  while (std::getline(in, line)) cleaned << detail::strip_comment(line) << "\n";
  boost::property_tree::ptree pt;
  std::istringstream cin(cleaned.str());
  try {
    boost::property_tree::ini_parser::read_ini(cin, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw UsageError("config " + origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  KeyValues out;
  detail::flatten(pt, "", out);
  return out;
}

inline KeyValues load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

// "[1, 2, 3]" or "1,2,3" -> {"1","2","3"}
inline std::vector<std::string> parse_list(std::string_view v) {
  v = text::trim(v);
  if (!v.empty() && v.front() == '[') v.remove_prefix(1);
  if (!v.empty() && v.back() == ']') v.remove_suffix(1);
  std::vector<std::string> out;
  if (text::trim(v).empty()) return out;
  for (auto& part : text::split(v, ',')) out.push_back(unquote(part));
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw UsageError("config key '" + key + "': expected true/false, got '" + v + "'");
}

}  // namespace dse2qa::config
