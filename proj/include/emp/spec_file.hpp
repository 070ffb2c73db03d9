#pragma once

// Problem-spec files: line-oriented `key = value` entries grouped under
// [family], [problem] and [tolerances]. '#' starts a comment. Lists are
// comma separated. Numbers accept `inf`, `+inf` and `-inf`.
//
//   [family]
//   name = explicit
//   p = 1, 1, 1
//   sigma = 2, 2, 5
//   tail = linear
//   offset = 3
//   slope = 1
//
//   [problem]
//   entropy = mb
//   mode = solve
//   u = 1
//   v = 2.5

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "emp/entropy.hpp"
#include "emp/errors.hpp"
#include "emp/sequence.hpp"

namespace emp {

struct FamilySpec {
  std::string name;
  std::map<std::string, double> params;
  std::vector<double> p, sigma;  // explicit prefix only
  std::string tail;              // explicit prefix only

  friend bool operator==(const FamilySpec&, const FamilySpec&) = default;
};

struct ProblemSpec {
  FamilySpec family;
  std::string entropy = "mb";
  std::string mode = "solve";
  std::map<std::string, double> targets;  // u, v, x, y or the sweep grid keys
  double tol = 1e-10;
  double epsilon = 1e-6;

  std::optional<double> target(const std::string& key) const {
    auto it = targets.find(key);
    if (it == targets.end()) return std::nullopt;
    return it->second;
  }

  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

namespace detail {

struct FamilyKeys {
  std::set<std::string> required, optional;
};

inline const std::map<std::string, FamilyKeys>& family_keys() {
  static const std::map<std::string, FamilyKeys> keys = {
      {"geometric", {{}, {}}},
      {"arithmetic", {{"a", "b"}, {"weight"}}},
      {"power_law", {{"c", "s"}, {"weight", "lambda", "q"}}},
      {"log_levels", {{"c"}, {"weight", "lambda"}}},
      {"weighted_geometric", {{"alpha0", "q"}, {}}},
      {"lattice3d", {{"scale"}, {"levels"}}},
      {"explicit", {{"offset"}, {"slope", "exponent", "weight", "lambda", "q"}}},
  };
  return keys;
}

inline const std::set<std::string>& problem_keys() {
  static const std::set<std::string> keys = {"u", "v", "x", "y", "u_min", "u_max", "u_steps",
                                             "v_min", "v_max", "v_steps"};
  return keys;
}

inline std::string format_number(double x) {
  if (std::isinf(x)) return x > 0 ? "+inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string_view trim(std::string_view s, std::size_t* lead = nullptr) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  if (lead) *lead = a;
  return s.substr(a, b - a);
}

inline double parse_number(std::string_view tok, int line, int col) {
  if (tok == "inf" || tok == "+inf") return kInf;
  if (tok == "-inf") return -kInf;
  std::string_view body = tok;
  if (!body.empty() && body.front() == '+') body.remove_prefix(1);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), x);
  if (ec != std::errc() || ptr != body.data() + body.size() || body.empty() || std::isnan(x))
    throw ParseError("expected a number, got '" + std::string(tok) + "'", line, col);
  return x;
}

inline std::vector<double> parse_list(std::string_view s, int line, int col) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = s.find(',', pos);
    const std::string_view raw = s.substr(pos, comma == std::string_view::npos ? s.size() - pos : comma - pos);
    std::size_t lead = 0;
    const std::string_view tok = trim(raw, &lead);
    out.push_back(parse_number(tok, line, col + static_cast<int>(pos + lead)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace detail

/// Parses spec text; throws ParseError with a 1-based line and column.
inline ProblemSpec parse_spec(std::string_view text) {
  ProblemSpec spec;
  std::string section;
  std::set<std::string> seen_sections, seen_keys;
  bool have_entropy = false, have_mode = false;
  int name_line = 0;
  int line_no = 0;
  std::size_t start = 0;
  struct Pending {
    std::string key;
    std::string value;
    int line, col, vcol;
  };
  std::vector<Pending> family_entries;

  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    std::string_view raw = text.substr(start, nl == std::string_view::npos ? text.size() - start : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::size_t lead = 0;
    const std::string_view ln = detail::trim(raw, &lead);
    if (ln.empty()) continue;
    const int col0 = static_cast<int>(lead) + 1;

    if (ln.front() == '[') {
      if (ln.back() != ']') throw ParseError("unterminated section header", line_no, col0);
      section = std::string(detail::trim(ln.substr(1, ln.size() - 2)));
      if (section != "family" && section != "problem" && section != "tolerances")
        throw ParseError("unknown section [" + section + "]", line_no, col0);
      if (!seen_sections.insert(section).second)
        throw ParseError("section [" + section + "] appears twice", line_no, col0);
      continue;
    }
    if (section.empty()) throw ParseError("entry before any section header", line_no, col0);
    const std::size_t eq = ln.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no, col0);
    const std::string key(detail::trim(ln.substr(0, eq)));
    std::size_t vlead = 0;
    const std::string_view value = detail::trim(ln.substr(eq + 1), &vlead);
    const int vcol = col0 + static_cast<int>(eq + 1 + vlead);
    if (key.empty()) throw ParseError("empty key", line_no, col0);
    if (value.empty()) throw ParseError("missing value for '" + key + "'", line_no, vcol);
    if (!seen_keys.insert(section + "." + key).second)
      throw ParseError("duplicate key '" + key + "' in [" + section + "]", line_no, col0);

    if (section == "family") {
      if (key == "name") {
        spec.family.name = std::string(value);
        name_line = line_no;
        if (!detail::family_keys().count(spec.family.name))
          throw ParseError("unknown family '" + spec.family.name + "'", line_no, vcol);
      } else {
        family_entries.push_back({key, std::string(value), line_no, col0, vcol});
      }
    } else if (section == "problem") {
      if (key == "entropy") {
        spec.entropy = std::string(value);
        if (spec.entropy != "mb" && spec.entropy != "be" && spec.entropy != "fd")
          throw ParseError("entropy must be mb, be or fd", line_no, vcol);
        have_entropy = true;
      } else if (key == "mode") {
        spec.mode = std::string(value);
        static const std::set<std::string> modes = {"solve", "classify", "forward", "sweep", "verify"};
        if (!modes.count(spec.mode))
          throw ParseError("mode must be solve, classify, forward, sweep or verify", line_no, vcol);
        have_mode = true;
      } else if (detail::problem_keys().count(key)) {
        spec.targets[key] = detail::parse_number(value, line_no, vcol);
      } else {
        throw ParseError("unknown key '" + key + "' in [problem]", line_no, col0);
      }
    } else {
      if (key == "tol")
        spec.tol = detail::parse_number(value, line_no, vcol);
      else if (key == "epsilon")
        spec.epsilon = detail::parse_number(value, line_no, vcol);
      else
        throw ParseError("unknown key '" + key + "' in [tolerances]", line_no, col0);
    }
  }

  if (spec.family.name.empty()) throw ParseError("missing [family] name", line_no, 1);
  if (!have_entropy) throw ParseError("missing [problem] entropy", line_no, 1);
  if (!have_mode) throw ParseError("missing [problem] mode", line_no, 1);

  const detail::FamilyKeys& fk = detail::family_keys().at(spec.family.name);
  const bool is_explicit = spec.family.name == "explicit";
  for (const Pending& e : family_entries) {
    const int vcol = e.vcol;
    if (is_explicit && (e.key == "p" || e.key == "sigma")) {
      (e.key == "p" ? spec.family.p : spec.family.sigma) = detail::parse_list(e.value, e.line, vcol);
    } else if (is_explicit && e.key == "tail") {
      spec.family.tail = e.value;
      if (e.value != "linear" && e.value != "power" && e.value != "log" && e.value != "constant")
        throw ParseError("tail must be linear, power, log or constant", e.line, vcol);
    } else if (fk.required.count(e.key) || fk.optional.count(e.key)) {
      spec.family.params[e.key] = detail::parse_number(e.value, e.line, vcol);
    } else {
      throw ParseError("family '" + spec.family.name + "' takes no key '" + e.key + "'", e.line, e.col);
    }
  }
  for (const std::string& k : fk.required)
    if (!spec.family.params.count(k))
      throw ParseError("family '" + spec.family.name + "' needs '" + k + "'", name_line, 1);
  if (is_explicit) {
    if (spec.family.p.empty() || spec.family.sigma.empty() || spec.family.tail.empty())
      throw ParseError("explicit family needs p, sigma and tail", name_line, 1);
  }
  return spec;
}

inline ProblemSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open spec file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

/// Canonical text; parse(serialize(s)) == s.
inline std::string serialize_spec(const ProblemSpec& s) {
  std::ostringstream out;
  out << "[family]\nname = " << s.family.name << "\n";
  auto list = [&](const char* key, const std::vector<double>& v) {
    out << key << " = ";
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << detail::format_number(v[i]);
    out << "\n";
  };
  if (!s.family.p.empty()) list("p", s.family.p);
  if (!s.family.sigma.empty()) list("sigma", s.family.sigma);
  if (!s.family.tail.empty()) out << "tail = " << s.family.tail << "\n";
  for (const auto& [k, v] : s.family.params) out << k << " = " << detail::format_number(v) << "\n";
  out << "\n[problem]\nentropy = " << s.entropy << "\nmode = " << s.mode << "\n";
  for (const auto& [k, v] : s.targets) out << k << " = " << detail::format_number(v) << "\n";
  out << "\n[tolerances]\ntol = " << detail::format_number(s.tol) << "\nepsilon = " << detail::format_number(s.epsilon)
      << "\n";
  return out.str();
}

/// Builds the family; throws ConfigurationError for invalid parameters.
inline SequenceFamily make_family(const FamilySpec& f) {
  auto get = [&](const char* k, double dflt) {
    auto it = f.params.find(k);
    return it == f.params.end() ? dflt : it->second;
  };
  if (f.name == "geometric") return SequenceFamily::geometric();
  if (f.name == "arithmetic") return SequenceFamily::arithmetic(get("a", 0), get("b", 1), get("weight", 1));
  if (f.name == "power_law")
    return SequenceFamily::power_law(get("c", 1), get("s", 1), get("weight", 1), get("lambda", 0), get("q", 0));
  if (f.name == "log_levels") return SequenceFamily::log_levels(get("c", 1), get("weight", 1), get("lambda", 0));
  if (f.name == "weighted_geometric") return SequenceFamily::weighted_geometric(get("alpha0", 0), get("q", 0));
  if (f.name == "lattice3d") return SequenceFamily::lattice3d(get("scale", 1));
  if (f.name == "explicit") {
    TailRule r;
    if (f.tail == "linear") r.shape = TailShape::Linear;
    else if (f.tail == "power") r.shape = TailShape::Power;
    else if (f.tail == "log") r.shape = TailShape::Log;
    else r.shape = TailShape::Constant;
    r.offset = get("offset", 0);
    r.slope = get("slope", r.shape == TailShape::Constant ? 0.0 : 1.0);
    r.exponent = get("exponent", 1);
    r.weight = get("weight", 1);
    r.lambda = get("lambda", 0);
    r.q = get("q", 0);
    return SequenceFamily::explicit_prefix(f.p, f.sigma, r);
  }
  throw ConfigurationError("unknown family '" + f.name + "'");
}

}  // namespace emp
