#pragma once

#include <fstream>
#include <sstream>
#include <variant>

#include "claw.hpp"

namespace deltaclaw {

struct ProblemFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// key = value files: strings, integers and string arrays, with optional [table] headers
class KeyValueFile {
 public:
  using Value = std::variant<std::string, long long, std::vector<std::string>>;

  static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>") {
    KeyValueFile f;
    f.origin_ = origin;
    std::istringstream in(text);
    std::string line, table;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto s = strip(drop_comment(line));
      if (s.empty()) continue;
      if (s.front() == '[' && s.back() == ']' && s.find('=') == std::string::npos) {
        table = strip(s.substr(1, s.size() - 2));
        continue;
      }
      auto eq = s.find('=');
      if (eq == std::string::npos) f.fail(lineno, "expected key = value");
      std::string key = strip(s.substr(0, eq));
      std::string rest = strip(s.substr(eq + 1));
      if (key.empty()) f.fail(lineno, "empty key");
      // arrays may span lines
      if (!rest.empty() && rest.front() == '[') {
        while (!closes_array(rest)) {
          std::string more;
          if (!std::getline(in, more)) f.fail(lineno, "unterminated array");
          ++lineno;
          rest += " " + strip(drop_comment(more));
        }
      }
      std::string full = table.empty() ? key : table + "." + key;
      if (f.values_.count(full)) f.fail(lineno, "duplicate key " + full);
      f.values_[full] = f.value(rest, lineno);
      f.order_.push_back(full);
    }
    return f;
  }

  static KeyValueFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ProblemFileError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  bool has(const std::string& k) const { return values_.count(k) > 0; }

  std::string str(const std::string& k) const {
    auto* p = std::get_if<std::string>(&at(k));
    if (!p) throw ProblemFileError(origin_ + ": key " + k + " is not a string");
    return *p;
  }
  std::string str(const std::string& k, const std::string& def) const { return has(k) ? str(k) : def; }

  long long integer(const std::string& k) const {
    auto* p = std::get_if<long long>(&at(k));
    if (!p) throw ProblemFileError(origin_ + ": key " + k + " is not an integer");
    return *p;
  }
  long long integer(const std::string& k, long long def) const { return has(k) ? integer(k) : def; }

  std::vector<std::string> list(const std::string& k) const {
    auto* p = std::get_if<std::vector<std::string>>(&at(k));
    if (!p) throw ProblemFileError(origin_ + ": key " + k + " is not an array");
    return *p;
  }

  Expr expr(const std::string& k) const {
    try {
      return deltaclaw::parse(str(k));
    } catch (const ParseError& e) {
      throw ProblemFileError(origin_ + ": key " + k + ": " + e.what());
    }
  }

  // keys directly under a table, in file order
  std::vector<std::string> keys(const std::string& table = "") const {
    std::vector<std::string> out;
    std::string pre = table.empty() ? "" : table + ".";
    for (auto& k : order_) {
      if (k.compare(0, pre.size(), pre) != 0) continue;
      std::string rest = k.substr(pre.size());
      if (rest.find('.') == std::string::npos) out.push_back(rest);
    }
    return out;
  }

  const std::string& origin() const { return origin_; }

 private:
  const Value& at(const std::string& k) const {
    auto it = values_.find(k);
    if (it == values_.end()) throw ProblemFileError(origin_ + ": missing key " + k);
    return it->second;
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ProblemFileError(origin_ + ":" + std::to_string(line) + ": " + msg);
  }

  static std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::string drop_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }

  static bool closes_array(const std::string& s) {
    bool quoted = false;
    int depth = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
      if (quoted) continue;
      if (s[i] == '[') ++depth;
      if (s[i] == ']' && --depth == 0) return true;
    }
    return false;
  }

  std::string quoted(const std::string& s, std::size_t& i, int line) const {
    if (s[i] != '"') fail(line, "expected a quoted string");
    std::string out;
    for (++i; i < s.size(); ++i) {
      if (s[i] == '\\' && i + 1 < s.size()) {
        out += s[++i];
      } else if (s[i] == '"') {
        ++i;
        return out;
      } else {
        out += s[i];
      }
    }
    fail(line, "unterminated string");
  }

  Value value(const std::string& s, int line) const {
    if (s.empty()) fail(line, "missing value");
    if (s.front() == '"') {
      std::size_t i = 0;
      std::string v = quoted(s, i, line);
      if (!strip(s.substr(i)).empty()) fail(line, "trailing characters after string");
      return v;
    }
    if (s.front() == '[') {
      std::vector<std::string> items;
      std::size_t i = 1;
      while (true) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ',')) ++i;
        if (i >= s.size()) fail(line, "unterminated array");
        if (s[i] == ']') break;
        items.push_back(quoted(s, i, line));
      }
      return items;
    }
    try {
      std::size_t used = 0;
      long long v = std::stoll(s, &used);
      if (used != s.size()) fail(line, "bad integer " + s);
      return v;
    } catch (const std::logic_error&) {
      fail(line, "unrecognised value " + s);
    }
  }

  std::string origin_;
  std::map<std::string, Value> values_;
  std::vector<std::string> order_;
};

struct OdeEquation {
  int K = 2;
  Expr gamma;
  std::optional<Expr> inverse;  // u[0] in terms of u[1..K]
  std::vector<std::string> params;

  Expr delta() const { return u(K, 0) - gamma; }
};

struct Problem {
  std::string name;
  bool ode = false;
  Equation eq;
  OdeEquation ode_eq;
};

inline Problem load_equation(const KeyValueFile& f) {
  Problem p;
  p.name = f.str("name", f.origin());
  std::string form = f.str("form");
  std::vector<std::string> params;
  if (f.has("params")) params = f.list("params");
  if (form == "kovalevskaya") {
    KovalevskayaPDE k;
    k.K = static_cast<int>(f.integer("K"));
    k.s = static_cast<int>(f.integer("s", 0));
    k.L = static_cast<int>(f.integer("L", 0));
    k.omega = f.expr("omega");
    if (f.has("inverse")) k.inverse = f.expr("inverse");
    k.params = params;
    if (k.K < 1) throw ProblemFileError(f.origin() + ": K must be positive");
    p.eq = Equation::kovalevskaya(std::move(k));
  } else if (form == "quadgraph") {
    QuadGraphPDE q;
    q.corners[QuadGraphPDE::index(0, 0)] = f.expr("c00");
    q.corners[QuadGraphPDE::index(1, 0)] = f.expr("c10");
    q.corners[QuadGraphPDE::index(0, 1)] = f.expr("c01");
    q.corners[QuadGraphPDE::index(1, 1)] = f.expr("c11");
    q.params = params;
    p.eq = Equation::quadgraph(std::move(q));
  } else if (form == "ode") {
    p.ode = true;
    p.ode_eq.K = static_cast<int>(f.integer("K"));
    p.ode_eq.gamma = f.expr("gamma");
    if (f.has("inverse")) p.ode_eq.inverse = f.expr("inverse");
    p.ode_eq.params = params;
  } else {
    throw ProblemFileError(f.origin() + ": unknown form " + form);
  }
  return p;
}

inline Problem load_equation(const std::string& path) { return load_equation(KeyValueFile::load(path)); }

inline InitialDataSpec parse_spec(const std::string& s, const Equation& eq) {
  if (s == "rows") {
    if (!eq.is_kovalevskaya()) throw ProblemFileError("row data needs a Kovalevskaya equation");
    return InitialDataSpec::rows(eq.kov.K);
  }
  if (s == "cross") return InitialDataSpec::cross();
  if (s == "staircase") return InitialDataSpec::staircase();
  throw ProblemFileError("unknown initial data " + s);
}

inline DensityPair load_densities(const KeyValueFile& f, const Equation& eq) {
  DensityPair d{f.expr("F"), f.expr("G"), eq.default_spec()};
  if (f.has("spec")) d.spec = parse_spec(f.str("spec"), eq);
  return d;
}

inline DensityPair load_densities(const std::string& path, const Equation& eq) {
  return load_densities(KeyValueFile::load(path), eq);
}

// one expression per non-empty line, or a basis = [...] array
inline std::vector<Expr> load_basis(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProblemFileError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  std::vector<Expr> out;
  if (text.find('=') != std::string::npos) {
    auto f = KeyValueFile::parse(text, path);
    for (auto& s : f.list("basis")) out.push_back(parse(s));
    return out;
  }
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    auto h = line.find('#');
    if (h != std::string::npos) line = line.substr(0, h);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse(line));
  }
  return out;
}

}  // namespace deltaclaw
