#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "multiflow/errors.hpp"
#include "multiflow/mixture.hpp"
#include "multiflow/pressure.hpp"
#include "multiflow/profiles.hpp"
#include "multiflow/solver.hpp"
#include "multiflow/text.hpp"
#include "multiflow/viscosity.hpp"

namespace multiflow {

/*
 * Run configuration: bracketed sections of `key = value` lines, '#' starts a
 * comment. Matrices are row-major flat lists of N*N numbers separated by
 * commas or blanks. Profiles are a name followed by numbers, e.g.
 * `rho_1 = sine 1.0 0.1 1`. Pressure tables are `rho:p` pairs.
 *
 *   [model]      variant (modified|original), N
 *   [viscosity]  mu, lambda
 *   [pressure]   kind (polytropic|tabulated), K, gamma, table, table_<i>
 *   [exchange]   a
 *   [grid]       L, n_cells, bc (periodic|noslip)
 *   [time]       dt_init, dt_max, cfl, t_end, max_steps, density_floor,
 *                steady_tol, viscous_solve_tol
 *   [initial]    rho_<i>, u_<i>
 *   [forcing]    f_<i>
 *   [output]     cadence, directory
 */

struct ConfigDiagnostic {
  enum class Kind { Syntax, Semantic, Warning };
  Kind kind = Kind::Semantic;
  int line = 0;       ///< 1-based, 0 when the field is absent
  std::string field;  ///< "section.key" or "section"
  std::string message;

  std::string render() const {
    std::ostringstream out;
    out << (kind == Kind::Syntax ? "syntax error" : kind == Kind::Warning ? "warning" : "error");
    if (line > 0) out << " (line " << line << ")";
    if (!field.empty()) out << " " << field;
    out << ": " << message;
    return out.str();
  }
};

/// Carries every syntax and semantic error found in one document.
class ConfigParseError : public ConfigError {
 public:
  explicit ConfigParseError(std::vector<ConfigDiagnostic> diagnostics)
      : ConfigError(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {}
  const std::vector<ConfigDiagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  static std::string summarize(const std::vector<ConfigDiagnostic>& d) {
    std::ostringstream out;
    out << d.size() << " configuration error" << (d.size() == 1 ? "" : "s");
    for (const auto& e : d) out << "\n  " << e.render();
    return out.str();
  }
  std::vector<ConfigDiagnostic> diagnostics_;
};

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct ConfigSection {
  std::string name;
  int line = 0;
  std::vector<ConfigEntry> entries;
};

/// Syntax layer: sections and raw entries, no interpretation.
struct ConfigDocument {
  std::vector<ConfigSection> sections;
  std::vector<ConfigDiagnostic> errors;

  static ConfigDocument parse(std::string_view text) {
    ConfigDocument doc;
    int line_no = 0;
    bool any_content = false;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) {
        if (end == text.size()) break;
        continue;
      }
      any_content = true;
      auto syntax = [&](std::string msg) {
        doc.errors.push_back({ConfigDiagnostic::Kind::Syntax, line_no, "", std::move(msg)});
      };
      if (line.front() == '[') {
        if (line.back() != ']') {
          syntax("section header must end with ']'");
          continue;
        }
        const auto name = trim(line.substr(1, line.size() - 2));
        if (name.empty() || name.find_first_of(" \t[]=") != std::string_view::npos) {
          syntax("malformed section name '" + std::string(name) + "'");
          continue;
        }
        if (doc.find_section(name)) {
          syntax("duplicate section [" + std::string(name) + "]");
          continue;
        }
        doc.sections.push_back({std::string(name), line_no, {}});
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        syntax("expected 'key = value' or '[section]'");
        continue;
      }
      const auto key = trim(line.substr(0, eq));
      const auto value = trim(line.substr(eq + 1));
      if (key.empty() || key.find_first_of(" \t") != std::string_view::npos) {
        syntax("malformed key '" + std::string(key) + "'");
        continue;
      }
      if (value.empty()) {
        syntax("key '" + std::string(key) + "' has no value");
        continue;
      }
      if (doc.sections.empty()) {
        syntax("key '" + std::string(key) + "' appears before any [section]");
        continue;
      }
      auto& sec = doc.sections.back();
      if (std::any_of(sec.entries.begin(), sec.entries.end(), [&](const auto& e) { return e.key == key; })) {
        syntax("duplicate key '" + std::string(key) + "' in [" + sec.name + "]");
        continue;
      }
      sec.entries.push_back({std::string(key), std::string(value), line_no});
    }
    if (!any_content) doc.errors.push_back({ConfigDiagnostic::Kind::Syntax, 0, "", "configuration is empty"});
    return doc;
  }

  const ConfigSection* find_section(std::string_view name) const {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }

  const ConfigEntry* find(std::string_view section, std::string_view key) const {
    const auto* sec = find_section(section);
    if (!sec) return nullptr;
    for (const auto& e : sec->entries)
      if (e.key == key) return &e;
    return nullptr;
  }

  /// Inserts or replaces one value; creates the section if needed.
  void set(std::string_view section, std::string_view key, std::string value) {
    ConfigSection* sec = nullptr;
    for (auto& s : sections)
      if (s.name == section) sec = &s;
    if (!sec) {
      sections.push_back({std::string(section), 0, {}});
      sec = &sections.back();
    }
    for (auto& e : sec->entries) {
      if (e.key == key) {
        e.value = std::move(value);
        return;
      }
    }
    sec->entries.push_back({std::string(key), std::move(value), 0});
  }
};

struct PressureTable {
  std::vector<double> rho;
  std::vector<double> p;
  bool operator==(const PressureTable&) const = default;
};

struct PressureSpec {
  std::string kind = "polytropic";
  std::vector<double> K{1.0};      ///< one value, or one per constituent (original model)
  std::vector<double> gamma{2.0};  ///< same shape rule as K
  std::vector<PressureTable> tables;  ///< tabulated: one shared table or one per constituent
  bool operator==(const PressureSpec&) const = default;
};

struct RunConfig {
  ModelVariant variant = ModelVariant::Modified;
  int n_constituents = 1;
  std::vector<double> mu;
  std::vector<double> lambda;
  PressureSpec pressure;
  std::optional<std::vector<double>> exchange;
  Grid1D grid{1.0, 64, Boundary::Periodic};
  SolverConfig solver;
  std::vector<ProfileSpec> initial_rho;
  std::vector<ProfileSpec> initial_u;
  std::vector<ProfileSpec> forcing;
  std::string directory;  ///< empty: not set in the file
  std::vector<ConfigDiagnostic> warnings;

  /// Equality of the configured run; warnings are derived and ignored.
  bool operator==(const RunConfig& o) const {
    return variant == o.variant && n_constituents == o.n_constituents && mu == o.mu && lambda == o.lambda &&
           pressure == o.pressure && exchange == o.exchange && grid == o.grid && solver == o.solver &&
           initial_rho == o.initial_rho && initial_u == o.initial_u && forcing == o.forcing &&
           directory == o.directory;
  }
};

namespace detail {

struct KnownKeys {
  const char* section;
  std::vector<std::string_view> keys;
  std::vector<std::string_view> indexed;  ///< prefixes taking _1.._N
};

inline const std::vector<KnownKeys>& known_keys() {
  static const std::vector<KnownKeys> table{
      {"model", {"variant", "N"}, {}},
      {"viscosity", {"mu", "lambda"}, {}},
      {"pressure", {"kind", "K", "gamma", "table"}, {"table"}},
      {"exchange", {"a"}, {}},
      {"grid", {"L", "n_cells", "bc"}, {}},
      {"time",
       {"dt_init", "dt_max", "cfl", "t_end", "max_steps", "density_floor", "steady_tol", "viscous_solve_tol"},
       {}},
      {"initial", {}, {"rho", "u"}},
      {"forcing", {}, {"f"}},
      {"output", {"cadence", "directory"}, {}},
  };
  return table;
}

inline Matrix to_matrix(const std::vector<double>& flat, int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = flat[i * n + j];
  return m;
}

/// Index i for keys of the form prefix_i, or 0.
inline int key_index(std::string_view key, std::string_view prefix) {
  if (key.size() <= prefix.size() + 1 || key.substr(0, prefix.size()) != prefix || key[prefix.size()] != '_') {
    return 0;
  }
  const auto idx = parse_integer(key.substr(prefix.size() + 1));
  return idx && *idx > 0 && *idx < 100000 ? static_cast<int>(*idx) : 0;
}

/// Whether `section.key` names a configurable value (indices unchecked).
inline bool key_is_known(std::string_view section, std::string_view key) {
  for (const auto& k : known_keys()) {
    if (section != k.section) continue;
    if (std::find(k.keys.begin(), k.keys.end(), key) != k.keys.end()) return true;
    for (auto prefix : k.indexed)
      if (key_index(key, prefix) > 0) return true;
    return false;
  }
  return false;
}

inline bool section_is_known(std::string_view section) {
  for (const auto& k : known_keys())
    if (section == k.section) return true;
  return false;
}

class Interpreter {
 public:
  explicit Interpreter(const ConfigDocument& doc) : doc_(doc) {}

  RunConfig run() {
    for (const auto& e : doc_.errors) errors_.push_back(e);
    check_unknown();
    RunConfig cfg;
    read_model(cfg);
    read_viscosity(cfg);
    read_pressure(cfg);
    read_exchange(cfg);
    read_grid(cfg);
    read_time(cfg);
    read_profiles(cfg);
    read_output(cfg);
    if (!errors_.empty()) throw ConfigParseError(errors_);
    cfg.warnings = warnings_;
    return cfg;
  }

 private:
  const ConfigDocument& doc_;
  std::vector<ConfigDiagnostic> errors_;
  std::vector<ConfigDiagnostic> warnings_;
  bool n_ok_ = false;

  void error(const ConfigEntry* e, std::string field, std::string msg) {
    errors_.push_back({ConfigDiagnostic::Kind::Semantic, e ? e->line : 0, std::move(field), std::move(msg)});
  }
  void warn(const ConfigEntry* e, std::string field, std::string msg) {
    warnings_.push_back({ConfigDiagnostic::Kind::Warning, e ? e->line : 0, std::move(field), std::move(msg)});
  }

  void check_unknown() {
    for (const auto& sec : doc_.sections) {
      if (!section_is_known(sec.name)) {
        errors_.push_back({ConfigDiagnostic::Kind::Semantic, sec.line, sec.name, "unknown section [" + sec.name + "]"});
        continue;
      }
      for (const auto& e : sec.entries) {
        if (!key_is_known(sec.name, e.key)) error(&e, sec.name + "." + e.key, "unknown key");
      }
    }
  }

  std::optional<double> number(const char* section, const char* key, double fallback, const ConfigEntry** where) {
    const ConfigEntry* e = doc_.find(section, key);
    if (where) *where = e;
    if (!e) return fallback;
    const auto v = parse_double(e->value);
    if (!v) {
      error(e, std::string(section) + "." + key, "'" + e->value + "' is not a number");
      return std::nullopt;
    }
    if (!std::isfinite(*v) && !(std::isinf(*v) && *v > 0 && std::string_view(key) == "dt_max")) {
      error(e, std::string(section) + "." + key, "value must be finite");
      return std::nullopt;
    }
    return v;
  }

  std::optional<long> integer(const char* section, const char* key, long fallback, const ConfigEntry** where) {
    const ConfigEntry* e = doc_.find(section, key);
    if (where) *where = e;
    if (!e) return fallback;
    const auto v = parse_integer(e->value);
    if (!v) error(e, std::string(section) + "." + key, "'" + e->value + "' is not an integer");
    return v;
  }

  std::optional<std::vector<double>> list(const ConfigEntry* e, const std::string& field) {
    std::vector<double> out;
    for (auto tok : split_tokens(e->value)) {
      const auto v = parse_double(tok);
      if (!v) {
        error(e, field, "'" + std::string(tok) + "' is not a number");
        return std::nullopt;
      }
      if (!std::isfinite(*v)) {
        error(e, field, "entries must be finite (NaN/Inf found)");
        return std::nullopt;
      }
      out.push_back(*v);
    }
    return out;
  }

  void read_model(RunConfig& cfg) {
    if (const auto* e = doc_.find("model", "variant")) {
      if (e->value == "modified") cfg.variant = ModelVariant::Modified;
      else if (e->value == "original") cfg.variant = ModelVariant::Original;
      else error(e, "model.variant", "must be 'modified' or 'original', got '" + e->value + "'");
    }
    const ConfigEntry* e = nullptr;
    const auto n = integer("model", "N", -1, &e);
    if (!e) {
      error(nullptr, "model.N", "required key is missing");
    } else if (n) {
      if (*n < 1 || *n > 64) {
        error(e, "model.N", "number of constituents must be between 1 and 64");
      } else {
        cfg.n_constituents = static_cast<int>(*n);
        n_ok_ = true;
      }
    }
  }

  std::optional<std::vector<double>> square(const char* section, const char* key, int n, bool required) {
    const ConfigEntry* e = doc_.find(section, key);
    const std::string field = std::string(section) + "." + key;
    if (!e) {
      if (required) error(nullptr, field, "required key is missing");
      return std::nullopt;
    }
    auto v = list(e, field);
    if (!v) return std::nullopt;
    if (n_ok_ && static_cast<int>(v->size()) != n * n) {
      std::ostringstream msg;
      msg << "expected N*N = " << n * n << " row-major entries, got " << v->size();
      error(e, field, msg.str());
      return std::nullopt;
    }
    return v;
  }

  void read_viscosity(RunConfig& cfg) {
    const int n = cfg.n_constituents;
    const auto mu = square("viscosity", "mu", n, true);
    auto lam = square("viscosity", "lambda", n, false);
    const bool lam_given = doc_.find("viscosity", "lambda") != nullptr;
    if (mu) cfg.mu = *mu;
    if (lam) cfg.lambda = *lam;
    else if (!lam_given && n_ok_) cfg.lambda.assign(static_cast<std::size_t>(n) * n, 0.0);
    if (!mu || !n_ok_ || (lam_given && !lam)) return;
    const auto rep = validate_viscosity(to_matrix(cfg.mu, n), to_matrix(cfg.lambda, n));
    if (!(rep.min_eig_mu > 0.0)) {
      std::ostringstream msg;
      msg << "sym(mu) has minimal eigenvalue " << format_double(rep.min_eig_mu) << "; it must be positive definite";
      error(doc_.find("viscosity", "mu"), "viscosity.mu", msg.str());
    }
    if (rep.min_eig_h < -rep.psd_tolerance) {
      std::ostringstream msg;
      msg << "sym(lambda + 2/3 mu) has minimal eigenvalue " << format_double(rep.min_eig_h)
          << "; it must be positive semidefinite";
      const ConfigEntry* where = doc_.find("viscosity", "lambda");
      error(where ? where : doc_.find("viscosity", "mu"), "viscosity.lambda", msg.str());
    }
  }

  std::optional<PressureTable> table(const ConfigEntry* e, const std::string& field) {
    PressureTable t;
    for (auto pair : split_tokens(e->value, ", \t")) {
      const auto colon = pair.find(':');
      const auto r = colon == std::string_view::npos ? std::nullopt : parse_double(pair.substr(0, colon));
      const auto p = colon == std::string_view::npos ? std::nullopt : parse_double(pair.substr(colon + 1));
      if (!r || !p) {
        error(e, field, "table entries must be 'rho:p' pairs, got '" + std::string(pair) + "'");
        return std::nullopt;
      }
      t.rho.push_back(*r);
      t.p.push_back(*p);
    }
    try {
      (void)PressureLaw::tabulated(t.rho, t.p);
    } catch (const Error& ex) {
      error(e, field, ex.what());
      return std::nullopt;
    }
    return t;
  }

  void read_pressure(RunConfig& cfg) {
    PressureSpec& ps = cfg.pressure;
    const ConfigEntry* kind = doc_.find("pressure", "kind");
    if (kind) ps.kind = kind->value;
    const int n = cfg.n_constituents;
    const bool per_constituent = cfg.variant == ModelVariant::Original;
    auto count_ok = [&](std::size_t got) {
      return got == 1 || (per_constituent && n_ok_ && static_cast<int>(got) == n);
    };
    const std::string counts = per_constituent ? "1 or N values" : "exactly 1 value (modified model)";
    if (ps.kind == "polytropic") {
      if (const auto* sec = doc_.find_section("pressure")) {
        for (const auto& e : sec->entries)
          if (e.key == "table" || key_index(e.key, "table") > 0)
            error(&e, "pressure." + e.key, "not used by a polytropic law");
      }
      const ConfigEntry* ke = doc_.find("pressure", "K");
      const ConfigEntry* ge = doc_.find("pressure", "gamma");
      if (ke) {
        if (auto v = list(ke, "pressure.K")) {
          if (!count_ok(v->size())) error(ke, "pressure.K", "expected " + counts);
          else ps.K = *v;
        }
      }
      if (ge) {
        if (auto v = list(ge, "pressure.gamma")) {
          if (!count_ok(v->size())) error(ge, "pressure.gamma", "expected " + counts);
          else ps.gamma = *v;
        }
      }
      for (double k : ps.K)
        if (!(k > 0.0)) error(ke, "pressure.K", "K must be positive, got " + format_double(k));
      bool warned = false;
      for (double g : ps.gamma) {
        if (!(g > 1.0)) {
          error(ge, "pressure.gamma", "gamma must exceed 1, got " + format_double(g));
        } else if (g <= kExistenceGammaThreshold && !warned) {
          warn(ge, "pressure.gamma",
               "gamma = " + format_double(g) +
                   " is at or below 3/2, the polytropic threshold of the existence theory; the run proceeds");
          warned = true;
        }
      }
    } else if (ps.kind == "tabulated") {
      ps.K.clear();
      ps.gamma.clear();
      for (const auto* key : {"K", "gamma"})
        if (const auto* e = doc_.find("pressure", key))
          error(e, std::string("pressure.") + key, "not used by a tabulated law");
      const ConfigEntry* shared = doc_.find("pressure", "table");
      std::vector<const ConfigEntry*> indexed;
      if (const auto* sec = doc_.find_section("pressure")) {
        for (const auto& e : sec->entries) {
          const int idx = key_index(e.key, "table");
          if (idx == 0) continue;
          if (!per_constituent) {
            error(&e, "pressure." + e.key, "per-constituent tables need the original model");
          } else if (n_ok_ && idx > n) {
            error(&e, "pressure." + e.key, "index exceeds N = " + std::to_string(n));
          } else {
            indexed.push_back(&e);
          }
        }
      }
      if (shared && !indexed.empty()) {
        error(shared, "pressure.table", "give either 'table' or 'table_<i>' keys, not both");
      } else if (shared) {
        if (auto t = table(shared, "pressure.table")) ps.tables.push_back(*t);
      } else if (!indexed.empty()) {
        if (n_ok_ && static_cast<int>(indexed.size()) != n) {
          error(indexed.front(), "pressure.table", "need table_1 .. table_" + std::to_string(n));
        } else if (n_ok_) {
          ps.tables.resize(n);
          for (const auto* e : indexed)
            if (auto t = table(e, "pressure." + e->key)) ps.tables[key_index(e->key, "table") - 1] = *t;
        }
      } else {
        error(nullptr, "pressure.table", "tabulated law needs a 'table' entry");
      }
    } else {
      error(kind, "pressure.kind", "must be 'polytropic' or 'tabulated', got '" + ps.kind + "'");
    }
  }

  void read_exchange(RunConfig& cfg) {
    const ConfigEntry* e = doc_.find("exchange", "a");
    if (!e) return;
    const auto a = square("exchange", "a", cfg.n_constituents, false);
    if (!a || !n_ok_) return;
    cfg.exchange = *a;
    try {
      const ExchangeMatrix m(to_matrix(*a, cfg.n_constituents));
      if (cfg.variant == ModelVariant::Modified && !m.is_zero()) {
        error(e, "exchange.a", "the modified model has no momentum exchange; a must vanish off the diagonal");
      }
    } catch (const Error& ex) {
      error(e, "exchange.a", ex.what());
    }
  }

  void read_grid(RunConfig& cfg) {
    const ConfigEntry* le = nullptr;
    const ConfigEntry* ne = nullptr;
    const auto length = number("grid", "L", 1.0, &le);
    const auto cells = integer("grid", "n_cells", 64, &ne);
    Boundary bc = Boundary::Periodic;
    if (const auto* e = doc_.find("grid", "bc")) {
      if (e->value == "periodic") bc = Boundary::Periodic;
      else if (e->value == "noslip") bc = Boundary::NoSlip;
      else error(e, "grid.bc", "must be 'periodic' or 'noslip', got '" + e->value + "'");
    }
    bool ok = true;
    if (length && !(*length > 0.0)) {
      error(le, "grid.L", "length must be positive");
      ok = false;
    }
    if (cells && (*cells < 3 || *cells > 10000000)) {
      error(ne, "grid.n_cells", "need at least 3 cells");
      ok = false;
    }
    if (ok && length && cells) cfg.grid = Grid1D(*length, static_cast<int>(*cells), bc);
    else cfg.grid.bc = bc;
  }

  void read_time(RunConfig& cfg) {
    SolverConfig& s = cfg.solver;
    struct Item {
      const char* key;
      double* target;
      const char* rule;
      bool (*valid)(double);
    };
    const Item items[] = {
        {"dt_init", &s.dt_init, "must be positive", [](double v) { return v > 0.0; }},
        {"dt_max", &s.dt_max, "must be positive", [](double v) { return v > 0.0; }},
        {"cfl", &s.cfl_target, "must lie in (0, 0.9]", [](double v) { return v > 0.0 && v <= 0.9; }},
        {"t_end", &s.t_end, "must be positive", [](double v) { return v > 0.0; }},
        {"steady_tol", &s.steady_tol, "must be positive", [](double v) { return v > 0.0; }},
        {"viscous_solve_tol", &s.viscous_solve_tol, "must be positive", [](double v) { return v > 0.0; }},
    };
    for (const auto& it : items) {
      const ConfigEntry* e = nullptr;
      const auto v = number("time", it.key, *it.target, &e);
      if (!v) continue;
      if (!it.valid(*v)) error(e, std::string("time.") + it.key, it.rule);
      else *it.target = *v;
    }
    const ConfigEntry* fe = nullptr;
    if (const auto v = number("time", "density_floor", 0.0, &fe); v && fe) {
      if (!(*v > 0.0)) error(fe, "time.density_floor", "must be positive");
      else s.density_floor = *v;
    }
    const ConfigEntry* me = nullptr;
    if (const auto v = integer("time", "max_steps", s.max_steps, &me)) {
      if (*v < 1) error(me, "time.max_steps", "must be at least 1");
      else s.max_steps = *v;
    }
  }

  std::optional<ProfileSpec> profile(const ConfigEntry* e, const std::string& field) {
    const auto toks = split_tokens(e->value, " \t,");
    ProfileSpec p;
    p.name = std::string(toks.front());
    p.params.clear();
    for (std::size_t k = 1; k < toks.size(); ++k) {
      const auto v = parse_double(toks[k]);
      if (!v) {
        error(e, field, "profile parameter '" + std::string(toks[k]) + "' is not a number");
        return std::nullopt;
      }
      p.params.push_back(*v);
    }
    try {
      validate_profile(p);
    } catch (const Error& ex) {
      error(e, field, ex.what());
      return std::nullopt;
    }
    return p;
  }

  void read_profiles(RunConfig& cfg) {
    if (!n_ok_) return;
    const int n = cfg.n_constituents;
    cfg.initial_rho.assign(n, ProfileSpec{"uniform", {1.0}});
    cfg.initial_u.assign(n, ProfileSpec{"uniform", {0.0}});
    cfg.forcing.assign(n, ProfileSpec{"uniform", {0.0}});
    struct Target {
      const char* section;
      const char* prefix;
      std::vector<ProfileSpec>* list;
    };
    const Target targets[] = {{"initial", "rho", &cfg.initial_rho},
                              {"initial", "u", &cfg.initial_u},
                              {"forcing", "f", &cfg.forcing}};
    for (const auto& t : targets) {
      const auto* sec = doc_.find_section(t.section);
      if (!sec) continue;
      for (const auto& e : sec->entries) {
        const int idx = key_index(e.key, t.prefix);
        if (idx == 0) continue;
        const std::string field = std::string(t.section) + "." + e.key;
        if (idx > n) {
          error(&e, field, "index exceeds N = " + std::to_string(n));
          continue;
        }
        if (auto p = profile(&e, field)) (*t.list)[idx - 1] = *p;
      }
    }
    for (int i = 0; i < n; ++i) {
      const Field rho = sample_profile(cfg.initial_rho[i], cfg.grid);
      const double lo = *std::min_element(rho.begin(), rho.end());
      const double hi = *std::max_element(rho.begin(), rho.end());
      const std::string key = "rho_" + std::to_string(i + 1);
      if (lo < 0.0) {
        error(doc_.find("initial", key), "initial." + key,
              "density profile takes negative values (minimum " + format_double(lo) + ")");
      } else if (!(hi > 0.0)) {
        error(doc_.find("initial", key), "initial." + key, "density profile has zero mass");
      }
    }
  }

  void read_output(RunConfig& cfg) {
    const ConfigEntry* ce = nullptr;
    if (const auto v = integer("output", "cadence", 1, &ce)) {
      if (*v < 1 || *v > std::numeric_limits<int>::max()) error(ce, "output.cadence", "must be at least 1");
      else cfg.solver.cadence = static_cast<int>(*v);
    }
    if (const auto* e = doc_.find("output", "directory")) cfg.directory = e->value;
  }
};

inline std::string join_numbers(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ", ";
    out += format_double(v[k]);
  }
  return out;
}

inline std::string render_profile(const ProfileSpec& p) {
  std::string out = p.name;
  for (double v : p.params) out += " " + format_double(v);
  return out;
}

inline std::string render_table(const PressureTable& t) {
  std::string out;
  for (std::size_t k = 0; k < t.rho.size(); ++k) {
    if (k) out += ", ";
    out += format_double(t.rho[k]) + ":" + format_double(t.p[k]);
  }
  return out;
}

}  // namespace detail

/// Semantic layer over an already parsed document.
inline RunConfig interpret(const ConfigDocument& doc) { return detail::Interpreter(doc).run(); }

/// Parse and validate; throws ConfigParseError listing every problem found.
inline RunConfig parse_config(std::string_view text) { return interpret(ConfigDocument::parse(text)); }

/// Canonical text form; parse_config(render(c)) == c.
inline std::string render(const RunConfig& c) {
  using detail::join_numbers;
  std::ostringstream out;
  out << "[model]\nvariant = " << to_string(c.variant) << "\nN = " << c.n_constituents << "\n\n";
  out << "[viscosity]\nmu = " << join_numbers(c.mu) << "\nlambda = " << join_numbers(c.lambda) << "\n\n";
  out << "[pressure]\nkind = " << c.pressure.kind << "\n";
  if (c.pressure.kind == "polytropic") {
    out << "K = " << join_numbers(c.pressure.K) << "\ngamma = " << join_numbers(c.pressure.gamma) << "\n";
  } else if (c.pressure.tables.size() == 1) {
    out << "table = " << detail::render_table(c.pressure.tables.front()) << "\n";
  } else {
    for (std::size_t i = 0; i < c.pressure.tables.size(); ++i)
      out << "table_" << i + 1 << " = " << detail::render_table(c.pressure.tables[i]) << "\n";
  }
  out << "\n";
  if (c.exchange) out << "[exchange]\na = " << join_numbers(*c.exchange) << "\n\n";
  out << "[grid]\nL = " << format_double(c.grid.length) << "\nn_cells = " << c.grid.n_cells
      << "\nbc = " << to_string(c.grid.bc) << "\n\n";
  const SolverConfig& s = c.solver;
  out << "[time]\ndt_init = " << format_double(s.dt_init) << "\n";
  if (std::isfinite(s.dt_max)) out << "dt_max = " << format_double(s.dt_max) << "\n";
  out << "cfl = " << format_double(s.cfl_target) << "\nt_end = " << format_double(s.t_end)
      << "\nmax_steps = " << s.max_steps << "\n";
  if (s.density_floor) out << "density_floor = " << format_double(*s.density_floor) << "\n";
  out << "steady_tol = " << format_double(s.steady_tol) << "\nviscous_solve_tol = " << format_double(s.viscous_solve_tol)
      << "\n\n";
  out << "[initial]\n";
  for (std::size_t i = 0; i < c.initial_rho.size(); ++i)
    out << "rho_" << i + 1 << " = " << detail::render_profile(c.initial_rho[i]) << "\n";
  for (std::size_t i = 0; i < c.initial_u.size(); ++i)
    out << "u_" << i + 1 << " = " << detail::render_profile(c.initial_u[i]) << "\n";
  out << "\n[forcing]\n";
  for (std::size_t i = 0; i < c.forcing.size(); ++i)
    out << "f_" << i + 1 << " = " << detail::render_profile(c.forcing[i]) << "\n";
  out << "\n[output]\ncadence = " << s.cadence << "\n";
  if (!c.directory.empty()) out << "directory = " << c.directory << "\n";
  return out.str();
}

inline ViscosityMatrices build_viscosity(const RunConfig& c) {
  return ViscosityMatrices(detail::to_matrix(c.mu, c.n_constituents), detail::to_matrix(c.lambda, c.n_constituents));
}

inline std::vector<PressureLaw> build_pressure_laws(const RunConfig& c) {
  const int count = c.variant == ModelVariant::Modified ? 1 : c.n_constituents;
  std::vector<PressureLaw> laws;
  for (int i = 0; i < count; ++i) {
    if (c.pressure.kind == "polytropic") {
      const double K = c.pressure.K.size() == 1 ? c.pressure.K[0] : c.pressure.K.at(i);
      const double g = c.pressure.gamma.size() == 1 ? c.pressure.gamma[0] : c.pressure.gamma.at(i);
      laws.push_back(PressureLaw::polytropic(K, g));
    } else {
      const auto& t = c.pressure.tables.size() == 1 ? c.pressure.tables[0] : c.pressure.tables.at(i);
      laws.push_back(PressureLaw::tabulated(t.rho, t.p));
    }
  }
  return laws;
}

/// Whether any polytropic exponent sits at or below the existence threshold.
inline bool gamma_below_threshold(const RunConfig& c) {
  if (c.pressure.kind != "polytropic") return false;
  return std::any_of(c.pressure.gamma.begin(), c.pressure.gamma.end(),
                     [](double g) { return g <= kExistenceGammaThreshold; });
}

inline MixtureParams build_params(const RunConfig& c) {
  MixtureParams p;
  p.n_constituents = c.n_constituents;
  p.variant = c.variant;
  p.visc = build_viscosity(c);
  p.pressure = build_pressure_laws(c);
  if (c.exchange) p.exchange = ExchangeMatrix(detail::to_matrix(*c.exchange, c.n_constituents));
  const bool zero = std::all_of(c.forcing.begin(), c.forcing.end(), [](const ProfileSpec& f) {
    return f.name == "uniform" && f.params.size() == 1 && f.params[0] == 0.0;
  });
  if (!zero) {
    const std::vector<ProfileSpec> forcing = c.forcing;
    const double length = c.grid.length;
    p.body_force = [forcing, length](int i, double x, double) { return evaluate_profile(forcing.at(i), x, length); };
  }
  p.validate();
  return p;
}

inline MixtureState build_state(const RunConfig& c) {
  MixtureState s;
  s.grid = c.grid;
  s.variant = c.variant;
  for (int i = 0; i < c.n_constituents; ++i) {
    s.rho.push_back(sample_profile(c.initial_rho.at(i), c.grid));
    s.u.push_back(sample_profile(c.initial_u.at(i), c.grid));
  }
  s.validate();
  return s;
}

/// Replaces `section.key` in the document. Throws ConfigError if the path
/// does not name a configurable value.
inline void apply_override(ConfigDocument& doc, std::string_view path, std::string value) {
  const auto dot = path.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == path.size()) {
    throw ConfigError("parameter path '" + std::string(path) + "' must have the form section.key");
  }
  const auto section = path.substr(0, dot);
  const auto key = path.substr(dot + 1);
  if (!detail::key_is_known(section, key)) {
    throw ConfigError("parameter path '" + std::string(path) + "' does not resolve to a configuration key");
  }
  doc.set(section, key, std::move(value));
}

}  // namespace multiflow
