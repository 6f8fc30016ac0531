#include <cctype>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "oracles.hpp"

namespace edgescale::testing {

namespace {

bool is_metric_name(const std::string& s) {
  if (s.empty()) return false;
  auto head = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':'; };
  if (!head(s[0])) return false;
  for (char c : s) {
    if (!head(c) && !std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

bool is_label_name(const std::string& s) {
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return s.rfind("__", 0) != 0;
}

std::optional<double> parse_value(const std::string& s) {
  if (s == "NaN") return 0.0;
  if (s == "+Inf" || s == "Inf") return 1e308;
  if (s == "-Inf") return -1e308;
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  for (char c : s) {
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == 'e' || c == 'E' ||
          c == '+' || c == '-')) {
      return std::nullopt;
    }
  }
  return v;
}

bool is_int64(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

}  // namespace

std::vector<std::string> check_exposition(const std::string& text) {
  std::vector<std::string> errors;
  if (!text.empty() && text.back() != '\n') errors.push_back("output does not end with newline");

  const std::set<std::string> types = {"counter", "gauge", "histogram", "summary", "untyped"};
  std::map<std::string, std::string> type_of;
  std::set<std::string> helped, sampled_families, series, closed_families;
  std::string current_family;

  std::istringstream in(text);
  std::string line;
  int n = 0;
  auto err = [&](const std::string& m) { errors.push_back("line " + std::to_string(n) + ": " + m); };
  auto enter_family = [&](const std::string& name) {
    if (name == current_family) return;
    if (closed_families.count(name)) err("metric family '" + name + "' is not contiguous");
    if (!current_family.empty()) closed_families.insert(current_family);
    current_family = name;
  };

  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string keyword, name;
      ls >> keyword;
      if (keyword != "HELP" && keyword != "TYPE") continue;  // plain comment
      ls >> name;
      if (!is_metric_name(name)) {
        err("bad metric name in " + keyword);
        continue;
      }
      enter_family(name);
      if (keyword == "HELP") {
        if (!helped.insert(name).second) err("duplicate HELP for " + name);
      } else {
        std::string type, extra;
        ls >> type;
        if (!types.count(type)) err("unknown TYPE '" + type + "'");
        if (ls >> extra) err("trailing text after TYPE");
        if (type_of.count(name)) err("duplicate TYPE for " + name);
        if (sampled_families.count(name)) err("TYPE after samples for " + name);
        type_of[name] = type;
      }
      continue;
    }

    std::size_t i = 0;
    while (i < line.size() && line[i] != '{' && line[i] != ' ') ++i;
    const std::string name = line.substr(0, i);
    if (!is_metric_name(name)) {
      err("bad sample name '" + name + "'");
      continue;
    }
    std::string labels;
    if (i < line.size() && line[i] == '{') {
      const std::size_t open = i++;
      std::set<std::string> seen;
      bool ok = true;
      while (ok && i < line.size() && line[i] != '}') {
        std::size_t eq = line.find('=', i);
        if (eq == std::string::npos) { err("unterminated label set"); ok = false; break; }
        const std::string lname = line.substr(i, eq - i);
        if (!is_label_name(lname)) { err("bad label name '" + lname + "'"); ok = false; break; }
        if (!seen.insert(lname).second) { err("duplicate label " + lname); ok = false; break; }
        i = eq + 1;
        if (i >= line.size() || line[i] != '"') { err("label value not quoted"); ok = false; break; }
        ++i;
        while (i < line.size() && line[i] != '"') {
          if (line[i] == '\\') {
            if (i + 1 >= line.size() || (line[i + 1] != '\\' && line[i + 1] != '"' && line[i + 1] != 'n')) {
              err("bad escape in label value");
              ok = false;
              break;
            }
            i += 2;
          } else {
            ++i;
          }
        }
        if (!ok) break;
        if (i >= line.size()) { err("unterminated label value"); ok = false; break; }
        ++i;  // closing quote
        if (i < line.size() && line[i] == ',') {
          ++i;
        } else if (i >= line.size() || line[i] != '}') {
          err("expected ',' or '}' after label value");
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      if (i >= line.size() || line[i] != '}') {
        err("unterminated label set");
        continue;
      }
      labels = line.substr(open, i - open + 1);
      ++i;
    }
    if (i >= line.size() || line[i] != ' ') {
      err("missing space before value");
      continue;
    }
    std::istringstream rest(line.substr(i + 1));
    std::string value, timestamp, extra;
    rest >> value >> timestamp >> extra;
    auto v = parse_value(value);
    if (!v) err("bad sample value '" + value + "'");
    if (!timestamp.empty() && !is_int64(timestamp)) err("bad timestamp '" + timestamp + "'");
    if (!extra.empty()) err("trailing text after sample");

    std::string family = name;
    for (const char* suffix : {"_bucket", "_sum", "_count"}) {
      const std::string s(suffix);
      if (family.size() > s.size() && family.compare(family.size() - s.size(), s.size(), s) == 0 &&
          type_of.count(family.substr(0, family.size() - s.size()))) {
        family = family.substr(0, family.size() - s.size());
      }
    }
    enter_family(family);
    sampled_families.insert(family);
    if (!series.insert(name + labels).second) err("duplicate series " + name + labels);
    if (type_of.count(family) && type_of[family] == "counter" && v && *v < 0) {
      err("negative counter " + name);
    }
  }
  for (const auto& name : helped) {
    if (!type_of.count(name) && !sampled_families.count(name)) err("HELP without samples: " + name);
  }
  return errors;
}

}  // namespace edgescale::testing
