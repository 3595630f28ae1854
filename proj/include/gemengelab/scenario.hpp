#pragma once

// Declarative scenario files and the batch runner behind the CLI: a
// line-oriented format with nested blocks declaring spaces, couplings,
// detector arrays and lattice constructions, a roster of named property
// checks, and JSON reports. Runs are deterministic given the seed.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gemengelab/correlations.hpp"
#include "gemengelab/detector.hpp"
#include "gemengelab/gemenge.hpp"
#include "gemengelab/hilbert.hpp"
#include "gemengelab/locality.hpp"
#include "gemengelab/observables.hpp"
#include "gemengelab/premeasurement.hpp"
#include "gemengelab/random.hpp"

namespace gemengelab::scenario {

using Json = nlohmann::ordered_json;

enum class Pipeline { unitary_only, rule2 };

struct ObservableDecl {
  std::string name;
  std::string space;
  std::vector<double> eigenvalues;
  std::vector<std::vector<std::vector<Complex>>> eigenvectors;  // [outcome][vector][amp]
  int line = 0;
};

struct VectorDecl {
  std::string space;
  std::vector<Complex> amplitudes;
  std::optional<std::int64_t> basis_index;
  int line = 0;
};

struct PacketDecl {
  std::string lattice;
  bool gaussian = true;
  double center = 0.0;
  double width = 1.0;
  std::optional<std::string> support;
  std::vector<Complex> amplitudes;  // when not gaussian
  int line = 0;
};

struct KernelDecl {
  enum class Kind { position, shift, gaussian_packet, random_hermitian, dense };
  std::string lattice;
  Kind kind = Kind::position;
  double center = 0.0;
  double width = 1.0;
  std::vector<std::vector<Complex>> rows;
  int line = 0;
};

struct DomainDecl {
  std::string lattice;
  std::vector<int> indices;
  int line = 0;
};

struct DetectorDecl {
  int detector_count = 0;
  int ion_levels = 2;
  DetectorMode mode = DetectorMode::absorbing;
  std::vector<Complex> amplitudes;
  int line = 0;
};

struct EndStatesDecl {
  bool von_neumann = true;
  std::vector<std::vector<Complex>> vectors;  // flattened (outcome, multiplicity) order
};

struct CheckSpec {
  std::string name;
  std::vector<std::string> args;
  int line = 0;
};

struct ScenarioConfig {
  std::string name = "unnamed";
  std::uint64_t seed = 0;
  Tolerances tol;
  std::map<std::string, std::int64_t> spaces;
  std::map<std::string, std::vector<double>> lattices;
  std::map<std::string, DomainDecl> domains;
  std::map<std::string, KernelDecl> kernels;
  std::map<std::string, PacketDecl> packets;
  std::optional<ObservableDecl> system_observable;
  std::optional<ObservableDecl> pointer_observable;
  std::optional<VectorDecl> apparatus_init;
  EndStatesDecl end_states;
  std::optional<DetectorDecl> detector;
  std::optional<VectorDecl> input;
  Pipeline pipeline = Pipeline::unitary_only;
  std::vector<CheckSpec> checks;
};

// --- Parsing -------------------------------------------------------------

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string t;
  while (in >> t) tokens.push_back(t);
  return tokens;
}

inline double parse_real(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, "expected a real number, got '" + s + "'");
  }
}

inline std::int64_t parse_int(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line, "expected an integer, got '" + s + "'");
  }
}

// "re+imi" with optional exponents; plain reals and pure imaginaries accepted.
inline Complex parse_complex(const std::string& s, int line) {
  if (s.empty()) throw ParseError(line, "empty number");
  if (s.back() != 'i') return Complex(parse_real(s, line), 0.0);
  std::string body = s.substr(0, s.size() - 1);
  // Split before the last +/- that is not an exponent sign and not leading.
  std::size_t split = std::string::npos;
  for (std::size_t i = 1; i < body.size(); ++i) {
    if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E')
      split = i;
  }
  if (split == std::string::npos)
    return Complex(0.0, parse_real(body.empty() ? "1" : body, line));
  const double re = parse_real(body.substr(0, split), line);
  std::string imag = body.substr(split);
  if (imag == "+") imag = "1";
  if (imag == "-") imag = "-1";
  return Complex(re, parse_real(imag, line));
}

inline bool parse_bool(const std::string& s, int line) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ParseError(line, "expected true or false, got '" + s + "'");
}

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names = {
      "probability-reproducibility", "objectification",   "gemenge-weights",
      "repeatability",               "repeat-outcome",    "cluster-separability",
      "position-additivity",         "localization-laws", "correlation-erasure"};
  return names;
}

}  // namespace detail

class Parser {
 public:
  explicit Parser(std::string_view text) {
    std::string current;
    for (char c : text) {
      if (c == '\n') {
        lines_.push_back(current);
        current.clear();
      } else {
        current.push_back(c);
      }
    }
    if (!current.empty()) lines_.push_back(current);
  }

  ScenarioConfig parse() {
    ScenarioConfig cfg;
    cfg.tol = tols();
    while (pos_ < lines_.size()) {
      const int line = static_cast<int>(pos_) + 1;
      std::vector<std::string> t = next_tokens();
      if (t.empty()) continue;
      const std::string& head = t[0];

      if (head == "scenario") {
        need(t, 2, line);
        cfg.name = t[1];
      } else if (head == "seed") {
        need(t, 2, line);
        cfg.seed = static_cast<std::uint64_t>(detail::parse_int(t[1], line));
      } else if (head == "tol") {
        need(t, 3, line);
        set_tolerance(cfg.tol, t[1], detail::parse_real(t[2], line), line);
      } else if (head == "space") {
        need(t, 4, line);
        expect(t[2], "dim", line);
        cfg.spaces[t[1]] = detail::parse_int(t[3], line);
      } else if (head == "lattice") {
        parse_lattice(cfg, t, line);
      } else if (head == "domain") {
        parse_domain(cfg, t, line);
      } else if (head == "kernel") {
        parse_kernel(cfg, t, line);
      } else if (head == "packet") {
        parse_packet(cfg, t, line);
      } else if (head == "observable" || head == "pointer") {
        ObservableDecl decl = parse_observable(t, line);
        if (head == "observable")
          cfg.system_observable = std::move(decl);
        else
          cfg.pointer_observable = std::move(decl);
      } else if (head == "apparatus-init") {
        need(t, 4, line);
        expect(t[1], "on", line);
        expect(t[3], "vector", line);
        VectorDecl v{t[2], {}, std::nullopt, line};
        for (std::size_t i = 4; i < t.size(); ++i)
          v.amplitudes.push_back(detail::parse_complex(t[i], line));
        cfg.apparatus_init = std::move(v);
      } else if (head == "end-states") {
        need(t, 2, line);
        if (t[1] == "von-neumann") {
          cfg.end_states = EndStatesDecl{};
        } else if (t[1] == "explicit") {
          cfg.end_states.von_neumann = false;
          parse_end_state_block(cfg, line);
        } else {
          throw ParseError(line, "end-states must be von-neumann or explicit");
        }
      } else if (head == "detector-array") {
        parse_detector(cfg, t, line);
      } else if (head == "input") {
        need(t, 4, line);
        expect(t[1], "on", line);
        VectorDecl v{t[2], {}, std::nullopt, line};
        if (t[3] == "vector") {
          for (std::size_t i = 4; i < t.size(); ++i)
            v.amplitudes.push_back(detail::parse_complex(t[i], line));
        } else if (t[3] == "basis") {
          need(t, 5, line);
          v.basis_index = detail::parse_int(t[4], line);
        } else {
          throw ParseError(line, "input must be given as vector or basis");
        }
        cfg.input = std::move(v);
      } else if (head == "pipeline") {
        need(t, 2, line);
        if (t[1] == "unitary-only")
          cfg.pipeline = Pipeline::unitary_only;
        else if (t[1] == "rule2")
          cfg.pipeline = Pipeline::rule2;
        else
          throw ParseError(line, "pipeline must be unitary-only or rule2");
      } else if (head == "check") {
        need(t, 2, line);
        const auto& known = detail::known_checks();
        if (std::find(known.begin(), known.end(), t[1]) == known.end())
          throw ParseError(line, "unknown check name '" + t[1] + "'");
        CheckSpec spec{t[1], {t.begin() + 2, t.end()}, line};
        cfg.checks.push_back(std::move(spec));
      } else {
        throw ParseError(line, "unknown directive '" + head + "'");
      }
    }
    return cfg;
  }

 private:
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;

  std::vector<std::string> next_tokens() {
    std::string line = lines_[pos_++];
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    return detail::tokenize(line);
  }

  bool at_end() const { return pos_ >= lines_.size(); }

  static void need(const std::vector<std::string>& t, std::size_t count, int line) {
    if (t.size() < count) throw ParseError(line, "directive '" + t[0] + "' is missing arguments");
  }

  static void expect(const std::string& got, const std::string& want, int line) {
    if (got != want) throw ParseError(line, "expected '" + want + "', got '" + got + "'");
  }

  static void set_tolerance(Tolerances& tol, const std::string& key, double value, int line) {
    if (key == "norm") tol.norm = value;
    else if (key == "herm") tol.herm = value;
    else if (key == "orth") tol.orth = value;
    else if (key == "eq") tol.eq = value;
    else if (key == "pos") tol.pos = value;
    else if (key == "var") tol.var = value;
    else if (key == "rec") tol.rec = value;
    else throw ParseError(line, "unknown tolerance key '" + key + "'");
  }

  void parse_lattice(ScenarioConfig& cfg, const std::vector<std::string>& t, int line) {
    need(t, 4, line);
    std::vector<double> sites;
    if (t[2] == "sites") {
      for (std::size_t i = 3; i < t.size(); ++i)
        sites.push_back(detail::parse_real(t[i], line));
    } else if (t[2] == "uniform") {
      const std::int64_t n = detail::parse_int(t[3], line);
      for (std::int64_t i = 0; i < n; ++i) sites.push_back(static_cast<double>(i));
    } else {
      throw ParseError(line, "lattice must list sites or be uniform");
    }
    cfg.lattices[t[1]] = std::move(sites);
  }

  void parse_domain(ScenarioConfig& cfg, const std::vector<std::string>& t, int line) {
    need(t, 5, line);
    expect(t[2], "on", line);
    DomainDecl d{t[3], {}, line};
    if (t[4] == "indices") {
      for (std::size_t i = 5; i < t.size(); ++i)
        d.indices.push_back(static_cast<int>(detail::parse_int(t[i], line)));
    } else if (t[4] == "range") {
      need(t, 7, line);
      const int begin = static_cast<int>(detail::parse_int(t[5], line));
      const int end = static_cast<int>(detail::parse_int(t[6], line));
      for (int i = begin; i < end; ++i) d.indices.push_back(i);
    } else {
      throw ParseError(line, "domain must use indices or range");
    }
    cfg.domains[t[1]] = std::move(d);
  }

  void parse_kernel(ScenarioConfig& cfg, const std::vector<std::string>& t, int line) {
    need(t, 5, line);
    expect(t[2], "on", line);
    KernelDecl k;
    k.lattice = t[3];
    k.line = line;
    if (t[4] == "generator") {
      need(t, 6, line);
      if (t[5] == "position") k.kind = KernelDecl::Kind::position;
      else if (t[5] == "shift") k.kind = KernelDecl::Kind::shift;
      else if (t[5] == "random-hermitian") k.kind = KernelDecl::Kind::random_hermitian;
      else if (t[5] == "gaussian-packet") {
        k.kind = KernelDecl::Kind::gaussian_packet;
        need(t, 8, line);
        k.center = detail::parse_real(t[6], line);
        k.width = detail::parse_real(t[7], line);
      } else {
        throw ParseError(line, "unknown kernel generator '" + t[5] + "'");
      }
    } else if (t[4] == "dense") {
      k.kind = KernelDecl::Kind::dense;
      while (true) {
        if (at_end()) throw ParseError(line, "dense kernel block not closed with 'end'");
        const int row_line = static_cast<int>(pos_) + 1;
        std::vector<std::string> row = next_tokens();
        if (row.empty()) continue;
        if (row[0] == "end") break;
        expect(row[0], "row", row_line);
        std::vector<Complex> values;
        for (std::size_t i = 1; i < row.size(); ++i)
          values.push_back(detail::parse_complex(row[i], row_line));
        k.rows.push_back(std::move(values));
      }
    } else {
      throw ParseError(line, "kernel must be a generator or dense");
    }
    cfg.kernels[t[1]] = std::move(k);
  }

  void parse_packet(ScenarioConfig& cfg, const std::vector<std::string>& t, int line) {
    need(t, 5, line);
    expect(t[2], "on", line);
    PacketDecl p;
    p.lattice = t[3];
    p.line = line;
    if (t[4] == "gaussian") {
      need(t, 9, line);
      expect(t[5], "center", line);
      p.center = detail::parse_real(t[6], line);
      expect(t[7], "width", line);
      p.width = detail::parse_real(t[8], line);
      if (t.size() >= 11 && t[9] == "support") p.support = t[10];
    } else if (t[4] == "amplitudes") {
      p.gaussian = false;
      for (std::size_t i = 5; i < t.size(); ++i)
        p.amplitudes.push_back(detail::parse_complex(t[i], line));
    } else {
      throw ParseError(line, "packet must be gaussian or amplitudes");
    }
    cfg.packets[t[1]] = std::move(p);
  }

  ObservableDecl parse_observable(const std::vector<std::string>& t, int line) {
    need(t, 4, line);
    expect(t[2], "on", line);
    ObservableDecl decl;
    decl.name = t[1];
    decl.space = t[3];
    decl.line = line;
    while (true) {
      if (at_end()) throw ParseError(line, "observable block not closed with 'end'");
      const int inner_line = static_cast<int>(pos_) + 1;
      std::vector<std::string> inner = next_tokens();
      if (inner.empty()) continue;
      if (inner[0] == "end") break;
      expect(inner[0], "outcome", inner_line);
      need(inner, 2, inner_line);
      decl.eigenvalues.push_back(detail::parse_real(inner[1], inner_line));
      decl.eigenvectors.emplace_back();
      while (true) {
        if (at_end()) throw ParseError(inner_line, "outcome block not closed with 'end'");
        const int vec_line = static_cast<int>(pos_) + 1;
        std::vector<std::string> vec = next_tokens();
        if (vec.empty()) continue;
        if (vec[0] == "end") break;
        expect(vec[0], "vector", vec_line);
        std::vector<Complex> amps;
        for (std::size_t i = 1; i < vec.size(); ++i)
          amps.push_back(detail::parse_complex(vec[i], vec_line));
        decl.eigenvectors.back().push_back(std::move(amps));
      }
      if (decl.eigenvectors.back().empty())
        throw ParseError(inner_line, "outcome without eigenvectors");
    }
    return decl;
  }

  void parse_end_state_block(ScenarioConfig& cfg, int line) {
    while (true) {
      if (at_end()) throw ParseError(line, "end-states block not closed with 'end'");
      const int vec_line = static_cast<int>(pos_) + 1;
      std::vector<std::string> vec = next_tokens();
      if (vec.empty()) continue;
      if (vec[0] == "end") break;
      expect(vec[0], "vector", vec_line);
      std::vector<Complex> amps;
      for (std::size_t i = 1; i < vec.size(); ++i)
        amps.push_back(detail::parse_complex(vec[i], vec_line));
      cfg.end_states.vectors.push_back(std::move(amps));
    }
  }

  void parse_detector(ScenarioConfig& cfg, const std::vector<std::string>& t, int line) {
    DetectorDecl d;
    d.line = line;
    std::size_t i = 1;
    while (i < t.size()) {
      if (t[i] == "n") {
        need(t, i + 2, line);
        d.detector_count = static_cast<int>(detail::parse_int(t[i + 1], line));
        i += 2;
      } else if (t[i] == "ion-levels") {
        need(t, i + 2, line);
        d.ion_levels = static_cast<int>(detail::parse_int(t[i + 1], line));
        i += 2;
      } else if (t[i] == "mode") {
        need(t, i + 2, line);
        if (t[i + 1] == "absorbing") d.mode = DetectorMode::absorbing;
        else if (t[i + 1] == "non-absorbing") d.mode = DetectorMode::non_absorbing;
        else throw ParseError(line, "detector mode must be absorbing or non-absorbing");
        i += 2;
      } else if (t[i] == "a") {
        for (++i; i < t.size(); ++i)
          d.amplitudes.push_back(detail::parse_complex(t[i], line));
      } else {
        throw ParseError(line, "unknown detector-array field '" + t[i] + "'");
      }
    }
    if (d.detector_count < 1) throw ParseError(line, "detector-array needs n");
    if (d.amplitudes.empty()) throw ParseError(line, "detector-array needs amplitudes a");
    cfg.detector = std::move(d);
  }
};

inline ScenarioConfig parse_scenario(std::string_view text) { return Parser(text).parse(); }

// --- Serialization to the scenario format -----------------------------------

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_complex(const Complex& c) {
  std::string out = format_real(c.real());
  if (c.imag() >= 0.0 || std::isnan(c.imag())) out += "+";
  out += format_real(c.imag()) + "i";
  return out;
}

// Emits an `observable ... end` block; parsing it back reproduces the
// observable bit-exactly (full round-trip precision).
inline std::string serialize_observable(const SharpObservable& o, const std::string& name,
                                        const std::string& space_name) {
  std::string out = "observable " + name + " on " + space_name + "\n";
  for (int k = 0; k < o.outcome_count(); ++k) {
    out += "  outcome " + format_real(o.eigenvalue(k)) + "\n";
    for (const StateVector& v : o.eigenvectors(k)) {
      out += "    vector";
      for (Eigen::Index i = 0; i < v.amplitudes().size(); ++i)
        out += " " + format_complex(v.amplitudes()(i));
      out += "\n";
    }
    out += "  end\n";
  }
  out += "end\n";
  return out;
}

inline ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open scenario file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

// --- JSON helpers ----------------------------------------------------------

inline Json complex_json(const Complex& c) { return Json::array({c.real(), c.imag()}); }

inline Json vector_json(const Vector& v) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(complex_json(v(i)));
  return Json{{"dim", v.size()}, {"data", data}};
}

inline Json matrix_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(complex_json(m(i, j)));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"row_major", data}};
}

struct Report {
  Json json;
  bool all_passed = true;

  std::string dump(int indent = 2) const { return json.dump(indent); }
};

// --- Runner ----------------------------------------------------------------

namespace detail {

class Runner {
 public:
  explicit Runner(const ScenarioConfig& cfg) : cfg_(cfg), tol_(cfg.tol) {}

  Report run() {
    Report report;
    report.json["scenario"] = cfg_.name;
    report.json["seed"] = cfg_.seed;
    report.json["pipeline"] = cfg_.pipeline == Pipeline::rule2 ? "rule2" : "unitary-only";
    report.json["timestamp"] = iso_timestamp();

    Json checks = Json::array();
    for (const CheckSpec& spec : cfg_.checks) {
      Json entry = run_check(spec);
      report.all_passed = report.all_passed && entry["pass"].get<bool>();
      checks.push_back(std::move(entry));
    }
    report.json["checks"] = std::move(checks);

    // The pipeline states belong in the report even without checks.
    if (cfg_.system_observable && cfg_.input) {
      result();
      if (cfg_.pipeline == Pipeline::rule2 && cfg_.detector) rule2();
    }
    report.json["final_states"] = final_states();
    report.json["all_passed"] = report.all_passed;
    return report;
  }

 private:
  const ScenarioConfig& cfg_;
  Tolerances tol_;
  std::map<std::string, LatticeSpace> lattice_cache_;
  std::optional<PremeasurementSetup> setup_;
  std::optional<PremeasurementResult> result_;
  std::optional<Rule2Output> rule2_;

  static std::string iso_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  // -- resolution helpers --

  const LatticeSpace& lattice(const std::string& name, int line) {
    auto cached = lattice_cache_.find(name);
    if (cached != lattice_cache_.end()) return cached->second;
    auto it = cfg_.lattices.find(name);
    if (it == cfg_.lattices.end()) throw ParseError(line, "unknown lattice '" + name + "'");
    auto [ins, ok] = lattice_cache_.emplace(name, LatticeSpace(it->second, name));
    return ins->second;
  }

  HilbertSpace resolve_space(const std::string& name, int line) {
    auto it = cfg_.spaces.find(name);
    if (it != cfg_.spaces.end()) return HilbertSpace(it->second, name);
    auto lt = cfg_.lattices.find(name);
    if (lt != cfg_.lattices.end()) return lattice(name, line).space();
    throw ParseError(line, "unknown space '" + name + "'");
  }

  Domain domain(const std::string& name, int line) {
    auto it = cfg_.domains.find(name);
    if (it == cfg_.domains.end()) throw ParseError(line, "unknown domain '" + name + "'");
    const LatticeSpace& lat = lattice(it->second.lattice, it->second.line);
    return Domain(it->second.indices, lat.size());
  }

  Operator kernel(const std::string& name, int line) {
    auto it = cfg_.kernels.find(name);
    if (it == cfg_.kernels.end()) throw ParseError(line, "unknown kernel '" + name + "'");
    const KernelDecl& decl = it->second;
    const LatticeSpace& lat = lattice(decl.lattice, decl.line);
    switch (decl.kind) {
      case KernelDecl::Kind::position:
        return lat.position_operator();
      case KernelDecl::Kind::shift:
        return lat.shift_operator();
      case KernelDecl::Kind::gaussian_packet:
        return projector(lat.gaussian_packet(decl.center, decl.width));
      case KernelDecl::Kind::random_hermitian: {
        Rng rng(cfg_.seed);
        return random_hermitian(rng, lat.space());
      }
      case KernelDecl::Kind::dense:
        break;
    }
    const std::size_t n = static_cast<std::size_t>(lat.size());
    if (decl.rows.size() != n) throw ParseError(decl.line, "dense kernel row count mismatch");
    Matrix m(lat.size(), lat.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (decl.rows[i].size() != n) throw ParseError(decl.line, "dense kernel column count mismatch");
      for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = decl.rows[i][j];
    }
    return Operator(lat.space(), std::move(m));
  }

  StateVector packet(const std::string& name, int line) {
    auto it = cfg_.packets.find(name);
    if (it == cfg_.packets.end()) throw ParseError(line, "unknown packet '" + name + "'");
    const PacketDecl& decl = it->second;
    const LatticeSpace& lat = lattice(decl.lattice, decl.line);
    if (decl.gaussian) {
      std::optional<Domain> support;
      if (decl.support) support = domain(*decl.support, decl.line);
      return lat.gaussian_packet(decl.center, decl.width, support);
    }
    if (decl.amplitudes.size() != static_cast<std::size_t>(lat.size()))
      throw ParseError(decl.line, "packet amplitude count mismatch");
    Vector v(lat.size());
    for (std::size_t i = 0; i < decl.amplitudes.size(); ++i)
      v(static_cast<Eigen::Index>(i)) = decl.amplitudes[i];
    return StateVector(lat.space(), std::move(v), tol_);
  }

  SharpObservable build_observable(const ObservableDecl& decl) {
    HilbertSpace space = resolve_space(decl.space, decl.line);
    std::vector<std::vector<StateVector>> families;
    for (const auto& family : decl.eigenvectors) {
      families.emplace_back();
      for (const auto& amps : family) {
        if (amps.size() != static_cast<std::size_t>(space.dim()))
          throw ParseError(decl.line, "eigenvector length does not match space dimension");
        Vector v(space.dim());
        for (std::size_t i = 0; i < amps.size(); ++i) v(static_cast<Eigen::Index>(i)) = amps[i];
        families.back().emplace_back(space, std::move(v), tol_);
      }
    }
    return SharpObservable(space, decl.eigenvalues, std::move(families), tol_);
  }

  std::vector<std::vector<StateVector>> explicit_end_states(const SharpObservable& system,
                                                            int line) {
    std::vector<std::vector<StateVector>> ends;
    std::size_t next = 0;
    for (int k = 0; k < system.outcome_count(); ++k) {
      ends.emplace_back();
      for (int l = 0; l < system.multiplicity(k); ++l, ++next) {
        if (next >= cfg_.end_states.vectors.size())
          throw ParseError(line, "too few explicit end states");
        const auto& amps = cfg_.end_states.vectors[next];
        if (amps.size() != static_cast<std::size_t>(system.space().dim()))
          throw ParseError(line, "end state length does not match system dimension");
        Vector v(system.space().dim());
        for (std::size_t i = 0; i < amps.size(); ++i) v(static_cast<Eigen::Index>(i)) = amps[i];
        ends.back().emplace_back(system.space(), std::move(v), tol_);
      }
    }
    if (next != cfg_.end_states.vectors.size())
      throw ParseError(line, "too many explicit end states");
    return ends;
  }

  const PremeasurementSetup& setup() {
    if (setup_) return *setup_;
    if (!cfg_.system_observable) throw ParseError(0, "scenario declares no observable");
    SharpObservable system = build_observable(*cfg_.system_observable);

    if (cfg_.detector) {
      DetectorArrayModel model(cfg_.detector->detector_count, cfg_.detector->ion_levels,
                               cfg_.detector->amplitudes, tol_);
      if (cfg_.end_states.von_neumann) {
        setup_ = build_detector_setup(model, system, tol_);
      } else {
        setup_ = build_detector_setup(model, system,
                                      explicit_end_states(system, cfg_.detector->line), tol_);
      }
      return *setup_;
    }

    if (!cfg_.pointer_observable)
      throw ParseError(0, "scenario needs a pointer observable or a detector-array");
    if (!cfg_.apparatus_init) throw ParseError(0, "scenario needs an apparatus-init");
    SharpObservable pointer = build_observable(*cfg_.pointer_observable);
    HilbertSpace aspace = resolve_space(cfg_.apparatus_init->space, cfg_.apparatus_init->line);
    Vector amp(aspace.dim());
    if (cfg_.apparatus_init->amplitudes.size() != static_cast<std::size_t>(aspace.dim()))
      throw ParseError(cfg_.apparatus_init->line, "apparatus-init length mismatch");
    for (std::size_t i = 0; i < cfg_.apparatus_init->amplitudes.size(); ++i)
      amp(static_cast<Eigen::Index>(i)) = cfg_.apparatus_init->amplitudes[i];
    StateVector init(aspace, std::move(amp), tol_);

    std::vector<std::vector<StateVector>> ends;
    if (cfg_.end_states.von_neumann) {
      for (int k = 0; k < system.outcome_count(); ++k) ends.push_back(system.eigenvectors(k));
    } else {
      ends = explicit_end_states(system, cfg_.system_observable->line);
    }
    setup_ = PremeasurementSetup(std::move(system), pointer, std::move(init), std::move(ends), tol_);
    return *setup_;
  }

  StateVector input_state() {
    if (!cfg_.input) throw ParseError(0, "scenario declares no input state");
    HilbertSpace space = resolve_space(cfg_.input->space, cfg_.input->line);
    if (cfg_.input->basis_index) return StateVector::basis_state(space, *cfg_.input->basis_index);
    if (cfg_.input->amplitudes.size() != static_cast<std::size_t>(space.dim()))
      throw ParseError(cfg_.input->line, "input length does not match space dimension");
    Vector v(space.dim());
    for (std::size_t i = 0; i < cfg_.input->amplitudes.size(); ++i)
      v(static_cast<Eigen::Index>(i)) = cfg_.input->amplitudes[i];
    return StateVector(space, std::move(v), tol_);
  }

  const PremeasurementResult& result() {
    if (!result_) result_ = premeasure(setup(), input_state(), tol_);
    return *result_;
  }

  const Rule2Output& rule2() {
    if (!rule2_) {
      if (cfg_.pipeline != Pipeline::rule2)
        throw ParseError(0, "this check requires the rule2 pipeline");
      if (!cfg_.detector) throw ParseError(0, "rule2 pipeline requires a detector-array");
      DetectorArrayModel model(cfg_.detector->detector_count, cfg_.detector->ion_levels,
                               cfg_.detector->amplitudes, tol_);
      rule2_ = rule2_transform(result(), model, cfg_.detector->mode, tol_);
    }
    return *rule2_;
  }

  StateOperator reduced_apparatus_operator() {
    const PremeasurementResult& r = result();
    StateOperator joint = StateOperator::pure(r.final_vector, tol_);
    std::vector<int> keep;
    const int system_factors = setup().system_space().factor_count();
    for (int i = 0; i < setup().apparatus_space().factor_count(); ++i)
      keep.push_back(system_factors + i);
    return partial_trace(joint, std::span<const int>(keep), tol_);
  }

  // -- check argument helpers --

  static std::map<std::string, std::string> keyword_args(const CheckSpec& spec,
                                                         std::size_t start = 0) {
    std::map<std::string, std::string> kv;
    for (std::size_t i = start; i < spec.args.size(); i += 2) {
      if (i + 1 >= spec.args.size())
        throw ParseError(spec.line, "dangling check argument '" + spec.args[i] + "'");
      kv[spec.args[i]] = spec.args[i + 1];
    }
    return kv;
  }

  double tol_arg(const std::map<std::string, std::string>& kv, const CheckSpec& spec,
                 double fallback) const {
    auto it = kv.find("tol");
    if (it == kv.end()) return fallback;
    return detail::parse_real(it->second, spec.line);
  }

  // -- checks --

  Json run_check(const CheckSpec& spec) {
    Json entry;
    entry["name"] = spec.name;
    if (spec.name == "probability-reproducibility") return check_reproducibility(spec, entry);
    if (spec.name == "objectification") return check_objectification(spec, entry);
    if (spec.name == "gemenge-weights") return check_gemenge_weights(spec, entry);
    if (spec.name == "repeatability") return check_repeatability_spec(spec, entry);
    if (spec.name == "repeat-outcome") return check_repeat_outcome(spec, entry);
    if (spec.name == "cluster-separability") return check_cluster(spec, entry);
    if (spec.name == "position-additivity") return check_position_additivity(spec, entry);
    if (spec.name == "localization-laws") return check_localization(spec, entry);
    if (spec.name == "correlation-erasure") return check_erasure(spec, entry);
    throw ParseError(spec.line, "unknown check name '" + spec.name + "'");
  }

  Json check_reproducibility(const CheckSpec& spec, Json entry) {
    auto kv = keyword_args(spec);
    const double limit = tol_arg(kv, spec, tol_.eq);
    ReproducibilityReport rep = probability_reproducibility(setup(), input_state(), tol_);
    entry["max_residual"] = rep.max_residual;
    entry["tol"] = limit;
    entry["pass"] = rep.max_residual <= limit;
    return entry;
  }

  Json check_objectification(const CheckSpec& spec, Json entry) {
    auto kv = keyword_args(spec);
    auto expect = [&](const char* key) -> std::optional<bool> {
      auto it = kv.find(key);
      if (it == kv.end()) return std::nullopt;
      return detail::parse_bool(it->second, spec.line);
    };
    ObjectificationVerdict verdict;
    if (cfg_.pipeline == Pipeline::rule2) {
      GemengeState reduced = partial_trace_gemenge(
          rule2().gemenge, setup().system_space().factor_count(), 1, tol_);
      verdict = objectification_check(result(), reduced, tol_);
    } else {
      verdict = objectification_check(result(), reduced_apparatus_operator(), tol_);
    }
    entry["criterion_a"] = verdict.criterion_a;
    entry["criterion_b"] = verdict.criterion_b;
    entry["residual_a"] = verdict.residual_a;
    bool pass = true;
    if (auto want = expect("expect-a")) {
      entry["expected_a"] = *want;
      pass = pass && verdict.criterion_a == *want;
    }
    if (auto want = expect("expect-b")) {
      entry["expected_b"] = *want;
      pass = pass && verdict.criterion_b == *want;
    }
    entry["pass"] = pass;
    return entry;
  }

  Json check_gemenge_weights(const CheckSpec& spec, Json entry) {
    std::vector<double> expected;
    double limit = tol_.eq;
    for (std::size_t i = 0; i < spec.args.size(); ++i) {
      if (spec.args[i] == "tol") {
        if (i + 1 >= spec.args.size()) throw ParseError(spec.line, "tol needs a value");
        limit = detail::parse_real(spec.args[i + 1], spec.line);
        ++i;
      } else {
        expected.push_back(detail::parse_real(spec.args[i], spec.line));
      }
    }
    std::sort(expected.rbegin(), expected.rend());
    const GemengeState& g = rule2().gemenge;
    Json got = Json::array();
    double worst = 0.0;
    bool pass = expected.size() == static_cast<std::size_t>(g.branch_count());
    for (int i = 0; i < g.branch_count(); ++i) {
      const double w = g.branches()[static_cast<std::size_t>(i)].weight;
      got.push_back(w);
      if (pass) {
        worst = std::max(worst, std::abs(w - expected[static_cast<std::size_t>(i)]));
      }
    }
    entry["weights"] = got;
    entry["max_residual"] = worst;
    entry["tol"] = limit;
    entry["pass"] = pass && worst <= limit;
    return entry;
  }

  Json check_repeatability_spec(const CheckSpec& spec, Json entry) {
    auto kv = keyword_args(spec);
    const double limit = tol_arg(kv, spec, tol_.eq);
    RepeatabilityReport rep = check_repeatability(setup(), cfg_.seed, tol_);
    entry["max_residual"] = rep.max_residual;
    entry["kraus_idempotence_residual"] = rep.kraus_idempotence_residual;
    entry["von_neumann"] = rep.von_neumann;
    auto violation = kv.find("expect-violation-min");
    if (violation != kv.end()) {
      const double floor = detail::parse_real(violation->second, spec.line);
      entry["expect_violation_min"] = floor;
      entry["pass"] = rep.max_residual >= floor;
    } else {
      entry["tol"] = limit;
      entry["pass"] = rep.max_residual <= limit;
    }
    return entry;
  }

  Json check_repeat_outcome(const CheckSpec& spec, Json entry) {
    auto kv = keyword_args(spec);
    auto branch_it = kv.find("branch");
    if (branch_it == kv.end()) throw ParseError(spec.line, "repeat-outcome needs branch");
    const int branch = static_cast<int>(detail::parse_int(branch_it->second, spec.line));
    const double limit = tol_arg(kv, spec, tol_.eq);

    const Rule2Output& out = rule2();
    if (out.mode != DetectorMode::non_absorbing)
      throw ParseError(spec.line, "repeat-outcome requires non-absorbing detectors");
    const StateVector* released = nullptr;
    for (const auto& [outcome, state] : out.released)
      if (outcome == branch) released = &state;
    if (!released) throw ParseError(spec.line, "requested branch did not fire");

    PremeasurementResult second = premeasure(setup(), *released, tol_);
    const double p = second.probabilities[static_cast<std::size_t>(branch)];
    entry["branch"] = branch;
    entry["repeat_probability"] = p;
    entry["tol"] = limit;
    entry["pass"] = std::abs(p - 1.0) <= limit;
    return entry;
  }

  Json check_cluster(const CheckSpec& spec, Json entry) {
    auto kv = keyword_args(spec);
    const double limit = tol_arg(kv, spec, tol_.eq);
    auto require = [&](const char* key) {
      auto it = kv.find(key);
      if (it == kv.end())
        throw ParseError(spec.line, std::string("cluster-separability needs ") + key);
      return it->second;
    };
    Operator a = kernel(require("kernel"), spec.line);
    Domain d = domain(require("domain"), spec.line);
    StateVector psi = packet(require("left"), spec.line);
    StateVector phi = packet(require("right"), spec.line);
    Operator ad = localize(a, d);
    const double local_value = expectation(psi, a).real();

    double worst = 0.0;
    for (Statistics stat : {Statistics::symmetric, Statistics::antisymmetric}) {
      StateVector pair = pair_state(psi, phi, stat, tol_);
      const double joint = pair_expectation(ad, pair).real();
      worst = std::max(worst, std::abs(joint - local_value));
    }
    entry["max_residual"] = worst;
    entry["local_expectation"] = local_value;
    entry["tol"] = limit;
    entry["pass"] = worst <= limit;
    return entry;
  }

  Json check_position_additivity(const CheckSpec& spec, Json entry) {
    auto kv = keyword_args(spec);
    const double limit = tol_arg(kv, spec, tol_.eq);
    auto require = [&](const char* key) {
      auto it = kv.find(key);
      if (it == kv.end())
        throw ParseError(spec.line, std::string("position-additivity needs ") + key);
      return it->second;
    };
    StateVector psi = packet(require("left"), spec.line);
    StateVector phi = packet(require("right"), spec.line);
    auto lt = cfg_.packets.find(require("left"));
    const LatticeSpace& lat = lattice(lt->second.lattice, spec.line);
    Operator x = lat.position_operator();
    const double separate = expectation(psi, x).real() + expectation(phi, x).real();

    double worst = 0.0;
    for (Statistics stat : {Statistics::symmetric, Statistics::antisymmetric}) {
      StateVector pair = pair_state(psi, phi, stat, tol_);
      const double joint = pair_expectation(x, pair).real();
      worst = std::max(worst, std::abs(joint - separate));
    }
    entry["max_residual"] = worst;
    entry["sum_of_means"] = separate;
    entry["tol"] = limit;
    entry["pass"] = worst <= limit;
    return entry;
  }

  Json check_localization(const CheckSpec& spec, Json entry) {
    auto kv = keyword_args(spec);
    const double limit = tol_arg(kv, spec, tol_.eq);
    auto require = [&](const char* key) {
      auto it = kv.find(key);
      if (it == kv.end())
        throw ParseError(spec.line, std::string("localization-laws needs ") + key);
      return it->second;
    };
    int cases = 20;
    if (auto it = kv.find("cases"); it != kv.end())
      cases = static_cast<int>(detail::parse_int(it->second, spec.line));

    Operator declared = kernel(require("kernel"), spec.line);
    Domain d = domain(require("domain"), spec.line);
    auto kt = cfg_.kernels.find(require("kernel"));
    const LatticeSpace& lat = lattice(kt->second.lattice, spec.line);

    Rng rng(cfg_.seed + 2);
    double contraction_excess = 0.0;
    double idempotence_residual = 0.0;
    double superselection_residual = 0.0;
    for (int i = 0; i <= cases; ++i) {
      Operator a = (i == 0) ? declared : random_hermitian(rng, lat.space());
      Operator local = localize(a, d);
      contraction_excess = std::max(contraction_excess, op_norm(local) - op_norm(a));
      Operator twice = localize(local, d);
      idempotence_residual = std::max(
          idempotence_residual, (twice.matrix() - local.matrix()).cwiseAbs().maxCoeff());
      superselection_residual =
          std::max(superselection_residual, superselection_check(local, d, tol_).max_residual);
    }
    entry["contraction_excess"] = contraction_excess;
    entry["idempotence_residual"] = idempotence_residual;
    entry["superselection_residual"] = superselection_residual;
    entry["cases"] = cases;
    entry["tol"] = limit;
    entry["pass"] = contraction_excess <= 1e-12 && idempotence_residual == 0.0 &&
                    superselection_residual <= limit;
    return entry;
  }

  Json check_erasure(const CheckSpec& spec, Json entry) {
    auto kv = keyword_args(spec);
    const double limit = tol_arg(kv, spec, tol_.eq);
    const PremeasurementResult& r = result();
    SchmidtForm form =
        schmidt_decompose(r.final_vector, setup().system_space().factor_count(), tol_);
    ErasureCheck check = erasure_check(form, r.final_vector, 8, tol_);
    entry["projector_corr_phi_residual"] = check.projector_corr_phi_residual;
    entry["projector_corr_t_residual"] = check.projector_corr_t_residual;
    entry["phase_corr_phi_residual"] = check.phase_corr_phi_residual;
    entry["phase_corr_t_max"] = check.phase_corr_t_max;
    entry["tol"] = limit;
    entry["pass"] = check.pass(limit);
    return entry;
  }

  Json final_states() {
    Json out = Json::object();
    if (!result_) return out;
    const PremeasurementResult& r = *result_;
    out["probabilities"] = r.probabilities;
    out["composite_vector"] = vector_json(r.final_vector.amplitudes());
    out["reduced_apparatus"] = matrix_json(apparatus_state(r, tol_).matrix());
    if (rule2_) {
      Json branches = Json::array();
      for (const GemengeBranch& b : rule2_->gemenge.branches())
        branches.push_back(Json{{"weight", b.weight}, {"state", matrix_json(b.state.matrix())}});
      out["rule2_gemenge"] = Json{{"provenance", to_string(rule2_->gemenge.provenance())},
                                  {"mode", to_string(rule2_->mode)},
                                  {"system_factor_symbolic", rule2_->system_factor_symbolic},
                                  {"branches", std::move(branches)}};
    }
    return out;
  }
};

}  // namespace detail

inline Report run_scenario(const ScenarioConfig& cfg) { return detail::Runner(cfg).run(); }

// --- Presets ---------------------------------------------------------------

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"stern-gerlach-I", "stern-gerlach-II", "no-go",
                                                 "rule2-detector", "cluster-separability"};
  return names;
}

// Preset sources double as format documentation; the same text ships in the
// scenarios/ directory.
inline std::string preset_text(const std::string& name) {
  static const std::map<std::string, std::string> texts = {
      {"no-go", R"(# Unitary-only coupling on a two-level system: the reduced apparatus
# state has the right convex form but no gemenge structure.
scenario no-go
seed 1

space S dim 2
space A dim 2

observable O on S
  outcome 1
    vector 1+0i 0+0i
  end
  outcome -1
    vector 0+0i 1+0i
  end
end

pointer P on A
  outcome 1
    vector 1+0i 0+0i
  end
  outcome -1
    vector 0+0i 1+0i
  end
end

apparatus-init on A vector 1+0i 0+0i
end-states von-neumann

input on S vector 0.7071067811865476+0i 0.7071067811865476+0i

pipeline unitary-only

check objectification expect-a true expect-b false
check probability-reproducibility tol 1e-8
)"},
      {"rule2-detector", R"(# Two-detector ideal ionization array: the objectification transform
# yields the gemenge of correlated branch products.
scenario rule2-detector
seed 1

space S dim 2

observable O on S
  outcome 1
    vector 1+0i 0+0i
  end
  outcome -1
    vector 0+0i 1+0i
  end
end

detector-array n 2 ion-levels 2 mode non-absorbing a 0+0i 1+0i
end-states von-neumann

input on S vector 0.7071067811865476+0i 0.7071067811865476+0i

pipeline rule2

check objectification expect-a true expect-b true
check gemenge-weights 0.5 0.5 tol 1e-8
check probability-reproducibility tol 1e-8
check correlation-erasure tol 1e-8
)"},
      {"stern-gerlach-I", R"(# Spin measurement along the third axis on a superposed input beam:
# across the ensemble both detectors fire, half and half.
scenario stern-gerlach-I
seed 1

space S dim 2

observable spin-x3 on S
  outcome 1
    vector 1+0i 0+0i
  end
  outcome -1
    vector 0+0i 1+0i
  end
end

detector-array n 2 ion-levels 2 mode absorbing a 0+0i 1+0i
end-states von-neumann

# the +1 eigenstate of spin-x1, expanded in the x3 basis
input on S vector 0.7071067811865476+0i 0.7071067811865476+0i

pipeline rule2

check gemenge-weights 0.5 0.5 tol 1e-8
check objectification expect-a true expect-b true
)"},
      {"stern-gerlach-II", R"(# Chained spin measurements with non-absorbing detectors: the branch
# released after a + outcome repeats the + outcome with certainty.
scenario stern-gerlach-II
seed 1

space S dim 2

observable spin-x3 on S
  outcome 1
    vector 1+0i 0+0i
  end
  outcome -1
    vector 0+0i 1+0i
  end
end

detector-array n 2 ion-levels 2 mode non-absorbing a 0+0i 1+0i
end-states von-neumann

input on S vector 0.7071067811865476+0i 0.7071067811865476+0i

pipeline rule2

check repeat-outcome branch 0 tol 1e-8
check gemenge-weights 0.5 0.5 tol 1e-8
)"},
      {"cluster-separability", R"(# Disjointly supported packets on a 16-site lattice: a localized kernel
# measured on the pair state sees only the local packet, for either
# statistics, and position averages add.
scenario cluster-separability
seed 11

lattice L uniform 16
domain D on L range 0 8
domain Dc on L range 8 16

packet psi on L gaussian center 3.5 width 1.2 support D
packet phi on L gaussian center 11.5 width 1.2 support Dc

kernel a on L generator random-hermitian

check cluster-separability kernel a domain D left psi right phi tol 1e-10
check position-additivity left psi right phi tol 1e-10
check localization-laws kernel a domain D cases 20 tol 1e-10
)"}};
  auto it = texts.find(name);
  if (it == texts.end()) throw ParseError(0, "unknown preset '" + name + "'");
  return it->second;
}

inline ScenarioConfig preset(const std::string& name) {
  return parse_scenario(preset_text(name));
}

}  // namespace gemengelab::scenario
