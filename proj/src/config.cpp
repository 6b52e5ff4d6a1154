#include "homlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "homlab/errors.hpp"
#include "homlab/runner.hpp"

namespace homlab {

bool valid_size(int L) { return L >= 8 && L <= 512 && (L & (L - 1)) == 0; }

void RunConfig::validate() const {
  spec.validate();
  if (sizes.empty()) throw ConfigError("at least one domain size L is required");
  for (int L : sizes)
    if (!valid_size(L))
      throw ConfigError("L = " + std::to_string(L) + " is not a power of two in [8, 512]");
  if (samples < 1) throw ConfigError("N must be >= 1");
  if (moments.empty()) throw ConfigError("at least one moment order is required");
  for (double p : moments)
    if (!(p >= 1.0)) throw ConfigError("moment orders must be >= 1");
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw ConfigError("tolerance must lie in (0, 1)");
  try {
    minrad.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

SolveOptions RunConfig::solve_options() const {
  SolveOptions o;
  o.tolerance = tolerance;
  o.max_iterations = max_iterations;
  return o;
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return a.command == b.command && a.spec == b.spec && a.sizes == b.sizes && a.samples == b.samples &&
         a.moments == b.moments && a.tolerance == b.tolerance && a.max_iterations == b.max_iterations &&
         a.out == b.out && a.workers == b.workers && a.checkpoint == b.checkpoint &&
         a.minrad.theta == b.minrad.theta && a.minrad.p == b.minrad.p && a.minrad.gamma == b.minrad.gamma &&
         a.minrad.c_theta == b.minrad.c_theta;
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double to_double(const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("expected a number, got '" + v + "'");
  return out;
}

template <class Int>
Int to_int(const std::string& v) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("expected an integer, got '" + v + "'");
  return out;
}

template <class T, class F>
std::vector<T> to_list(const std::string& v, F convert) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(convert(trim(item)));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

struct Key {
  std::string section;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::string join_list(const std::vector<std::string>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + items[i];
  return s;
}

const std::vector<std::pair<std::string, Key>>& keys() {
  static const std::vector<std::pair<std::string, Key>> table = [] {
    std::vector<std::pair<std::string, Key>> t;
    const auto num = [](double v) { return format_number(v); };
    t.push_back({"dim", {"ensemble", [](RunConfig& c, const std::string& v) { c.spec.dim = to_int<int>(v); },
                         [](const RunConfig& c) { return std::to_string(c.spec.dim); }}});
    t.push_back({"law", {"ensemble", [](RunConfig& c, const std::string& v) { c.spec.law = parse_law(v); },
                         [](const RunConfig& c) { return to_string(c.spec.law); }}});
    t.push_back({"lambda", {"ensemble", [](RunConfig& c, const std::string& v) { c.spec.lambda = to_double(v); },
                            [num](const RunConfig& c) { return num(c.spec.lambda); }}});
    t.push_back({"alpha", {"ensemble", [](RunConfig& c, const std::string& v) { c.spec.alpha = to_double(v); },
                           [num](const RunConfig& c) { return num(c.spec.alpha); }}});
    t.push_back({"beta", {"ensemble", [](RunConfig& c, const std::string& v) { c.spec.beta = to_double(v); },
                          [num](const RunConfig& c) { return num(c.spec.beta); }}});
    t.push_back({"prob", {"ensemble", [](RunConfig& c, const std::string& v) { c.spec.prob = to_double(v); },
                          [num](const RunConfig& c) { return num(c.spec.prob); }}});
    t.push_back({"seed", {"ensemble", [](RunConfig& c, const std::string& v) { c.spec.seed = to_int<std::uint64_t>(v); },
                          [](const RunConfig& c) { return std::to_string(c.spec.seed); }}});
    t.push_back({"command", {"run", [](RunConfig& c, const std::string& v) { c.command = v; },
                             [](const RunConfig& c) { return c.command; }}});
    t.push_back({"L", {"run", [](RunConfig& c, const std::string& v) { c.sizes = to_list<int>(v, to_int<int>); },
                       [](const RunConfig& c) {
                         std::vector<std::string> s;
                         for (int L : c.sizes) s.push_back(std::to_string(L));
                         return join_list(s);
                       }}});
    t.push_back({"N", {"run", [](RunConfig& c, const std::string& v) { c.samples = to_int<std::size_t>(v); },
                       [](const RunConfig& c) { return std::to_string(c.samples); }}});
    t.push_back({"moments", {"run", [](RunConfig& c, const std::string& v) { c.moments = to_list<double>(v, to_double); },
                             [num](const RunConfig& c) {
                               std::vector<std::string> s;
                               for (double p : c.moments) s.push_back(num(p));
                               return join_list(s);
                             }}});
    t.push_back({"out", {"run", [](RunConfig& c, const std::string& v) { c.out = v; },
                         [](const RunConfig& c) { return c.out; }}});
    t.push_back({"workers", {"run", [](RunConfig& c, const std::string& v) { c.workers = to_int<std::size_t>(v); },
                             [](const RunConfig& c) { return std::to_string(c.workers); }}});
    t.push_back({"checkpoint", {"run", [](RunConfig& c, const std::string& v) { c.checkpoint = v; },
                                [](const RunConfig& c) { return c.checkpoint; }}});
    t.push_back({"tolerance", {"solver", [](RunConfig& c, const std::string& v) { c.tolerance = to_double(v); },
                               [num](const RunConfig& c) { return num(c.tolerance); }}});
    t.push_back({"max_iterations",
                 {"solver", [](RunConfig& c, const std::string& v) { c.max_iterations = to_int<std::size_t>(v); },
                  [](const RunConfig& c) { return std::to_string(c.max_iterations); }}});
    t.push_back({"theta", {"minrad", [](RunConfig& c, const std::string& v) { c.minrad.theta = to_double(v); },
                           [num](const RunConfig& c) { return num(c.minrad.theta); }}});
    t.push_back({"p", {"minrad", [](RunConfig& c, const std::string& v) { c.minrad.p = to_double(v); },
                       [num](const RunConfig& c) { return num(c.minrad.p); }}});
    t.push_back({"gamma", {"minrad", [](RunConfig& c, const std::string& v) { c.minrad.gamma = to_double(v); },
                           [num](const RunConfig& c) { return num(c.minrad.gamma); }}});
    t.push_back({"c_theta", {"minrad", [](RunConfig& c, const std::string& v) { c.minrad.c_theta = to_double(v); },
                             [num](const RunConfig& c) { return num(c.minrad.c_theta); }}});
    return t;
  }();
  return table;
}

const Key* find_key(const std::string& name) {
  for (const auto& [k, key] : keys())
    if (k == name) return &key;
  return nullptr;
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& source, RunConfig base) {
  RunConfig cfg = std::move(base);
  const std::set<std::string> sections{"ensemble", "run", "solver", "minrad"};
  std::map<std::string, int> seen;
  std::string section;
  std::string raw;
  int line_no = 0;
  const auto fail = [&](const std::string& msg) -> ConfigError {
    return ConfigError(source + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.contains(section)) throw fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail("expected 'key = value'");
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Key* key = find_key(name);
    if (!key) throw fail("unknown key '" + name + "'");
    if (!section.empty() && key->section != section)
      throw fail("key '" + name + "' belongs to [" + key->section + "], not [" + section + "]");
    if (const auto prev = seen.find(name); prev != seen.end())
      throw fail("duplicate key '" + name + "' (first set on line " + std::to_string(prev->second) + ")");
    seen[name] = line_no;
    try {
      key->set(cfg, value);
    } catch (const ConfigError& e) {
      throw fail(name + ": " + e.what());
    }
    try {
      // Range problems are reported on the line that introduced them.
      if (name == "L") {
        for (int L : cfg.sizes)
          if (!valid_size(L)) throw ConfigError("L = " + std::to_string(L) + " is not a power of two in [8, 512]");
      }
    } catch (const ConfigError& e) {
      throw fail(e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  return parse_config(in, path, std::move(base));
}

std::string serialize(const RunConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& [name, key] : keys()) {
    if (key.section != section) {
      out << (section.empty() ? "" : "\n") << '[' << key.section << "]\n";
      section = key.section;
    }
    out << name << " = " << key.get(cfg) << '\n';
  }
  return out.str();
}

}  // namespace homlab
