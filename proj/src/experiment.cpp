#include "phi4/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "phi4/besov.hpp"
#include "phi4/checks.hpp"
#include "phi4/dynamics.hpp"
#include "phi4/entropy.hpp"
#include "phi4/gaussian.hpp"
#include "phi4/noise.hpp"
#include "phi4/stats.hpp"

#ifndef PHI4_CODE_VERSION
#define PHI4_CODE_VERSION "unknown"
#endif

namespace phi4 {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "\n") + p;
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

std::optional<double> parse_number(const std::string& s) {
  double x = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return x;
}

// Removes a '#' comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    if (line[k] == '"') quoted = !quoted;
    if (line[k] == '#' && !quoted) return line.substr(0, k);
  }
  return line;
}

std::optional<ConfigValue> parse_value(const std::string& text, std::string& why) {
  if (text == "true") return ConfigValue(true);
  if (text == "false") return ConfigValue(false);
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') {
      why = "unterminated string";
      return std::nullopt;
    }
    return ConfigValue(text.substr(1, text.size() - 2));
  }
  if (text.front() == '[') {
    if (text.back() != ']') {
      why = "unterminated list";
      return std::nullopt;
    }
    std::vector<double> xs;
    const std::string body = trim(text.substr(1, text.size() - 2));
    if (body.empty()) return ConfigValue(xs);
    std::stringstream items(body);
    std::string item;
    while (std::getline(items, item, ',')) {
      const auto x = parse_number(trim(item));
      if (!x) {
        why = "list entry '" + trim(item) + "' is not a number";
        return std::nullopt;
      }
      xs.push_back(*x);
    }
    return ConfigValue(xs);
  }
  if (const auto x = parse_number(text)) return ConfigValue(*x);
  why = "cannot read value '" + text + "'";
  return std::nullopt;
}

template <class T>
const T& get_as(const std::map<std::string, ConfigValue>& entries, const std::string& path,
                const char* kind) {
  const auto it = entries.find(path);
  if (it == entries.end()) throw ConfigError({path + ": missing"});
  if (const T* v = std::get_if<T>(&it->second)) return *v;
  throw ConfigError({path + ": expected " + kind});
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

Config Config::parse(const std::string& text) {
  Config c;
  c.source_ = text;
  std::vector<std::string> problems;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      const std::string name = line.back() == ']' ? trim(line.substr(1, line.size() - 2)) : "";
      if (!is_identifier(name)) {
        problems.push_back(where + "bad section header '" + line + "'");
        continue;
      }
      section = name;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back(where + "expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!is_identifier(key)) {
      problems.push_back(where + "bad key '" + key + "'");
      continue;
    }
    const std::string path = section.empty() ? key : section + "." + key;
    if (value.empty()) {
      problems.push_back(path + ": missing value");
      continue;
    }
    std::string why;
    const auto v = parse_value(value, why);
    if (!v) {
      problems.push_back(path + ": " + why);
      continue;
    }
    if (!c.entries_.emplace(path, *v).second) problems.push_back(path + ": duplicate key");
  }
  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

Config Config::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot open config file " + path.string()});
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

double Config::number(const std::string& path) const { return get_as<double>(entries_, path, "a number"); }

long Config::integer(const std::string& path) const {
  return std::lround(get_as<double>(entries_, path, "an integer"));
}

bool Config::boolean(const std::string& path) const { return get_as<bool>(entries_, path, "true or false"); }

const std::string& Config::string(const std::string& path) const {
  return get_as<std::string>(entries_, path, "a string");
}

const std::vector<double>& Config::list(const std::string& path) const {
  return get_as<std::vector<double>>(entries_, path, "a list of numbers");
}

const std::vector<FieldSpec>& config_schema() {
  using K = FieldKind;
  using L = std::vector<double>;
  static const std::vector<FieldSpec> schema{
      {"grid.L", K::number, std::numbers::pi, 0.0, true, {}, "torus half-length"},
      {"grid.N", K::integer, 32.0, 1.0, false, {}, "sites per direction (even, or 1)"},
      {"model.lambda", K::number, 1.0, 0.0, false, {}, "quartic coupling"},
      {"model.mu", K::number, 1.0, {}, false, {}, "mass parameter"},
      {"time.dt", K::number, 0.01, 0.0, true, {}, "time step"},
      {"time.horizon", K::number, 1.0, 0.0, true, {}, "final time"},
      {"scheme.name", K::string, std::string("dpd-exponential"), {}, false,
       {"dpd-exponential", "langevin-euler", "langevin-exponential"}, "integrator"},
      {"scheme.symbol", K::string, std::string("spectral"), {}, false, {"spectral", "lattice"},
       "symbol of -Laplacian in the DPD scheme"},
      {"scheme.split", K::string, std::string("z"), {}, false, {"z", "v"},
       "initial datum carried by Z or by v"},
      {"initial.kind", K::string, std::string("zero"), {}, false, {"zero", "constant", "gff", "snapshot"},
       "initial condition"},
      {"initial.value", K::number, 0.0, {}, false, {}, "constant initial value"},
      {"initial.path", K::string, std::string(""), {}, false, {}, "snapshot file for kind = snapshot"},
      {"output.snapshot_every", K::integer, 0.0, 0.0, false, {}, "snapshot cadence in steps (0: none)"},
      {"output.observables_every", K::integer, 1.0, 1.0, false, {}, "observable cadence in steps"},
      {"run.seed", K::integer, 1.0, 0.0, false, {}, "global RNG seed"},
      {"run.replica", K::integer, 0.0, 0.0, false, {}, "replica index of a single simulation"},
      {"run.replicas", K::integer, 100.0, 2.0, false, {}, "Monte Carlo replicas"},
      {"run.budget_seconds", K::number, 3600.0, 0.0, true, {}, "wall-clock budget"},
      {"propagation.sub_L", K::list, L{1.0, 2.0, 4.0}, {}, false, {}, "sub-torus half-lengths"},
      {"propagation.times", K::list, L{0.5, 1.0}, {}, false, {}, "record times"},
      {"propagation.test_radius", K::number, 0.6, 0.0, true, {}, "support radius of the test bumps"},
      {"entropy.t", K::number, 1.0, 0.0, true, {}, "entropy time"},
      {"entropy.samples", K::integer, 200.0, 2.0, false, {}, "dynamics samples of m_t"},
      {"entropy.gff_samples", K::integer, 400.0, 2.0, false, {}, "GFF samples for the log-partition"},
      {"entropy.girsanov_replicas", K::integer, 32.0, 2.0, false, {}, "paths for the Girsanov bound"},
      {"invariance.dts", K::list, L{0.02, 0.01}, {}, false, {}, "two Langevin step sizes"},
      {"invariance.burn", K::number, 20.0, 0.0, false, {}, "burn-in time"},
      {"invariance.span", K::number, 400.0, 0.0, true, {}, "averaging time"},
      {"invariance.record_every", K::number, 0.2, 0.0, true, {}, "sampling interval"},
      {"invariance.mala_samples", K::integer, 4000.0, 2.0, false, {}, "kept MALA samples"},
      {"invariance.mala_thin", K::integer, 10.0, 1.0, false, {}, "MALA thinning"},
      {"invariance.mala_burn", K::integer, 3000.0, 0.0, false, {}, "MALA burn-in proposals"},
      {"norms.samples", K::integer, 50.0, 2.0, false, {}, "GFF samples"},
      {"norms.alpha", K::number, 0.2, 0.0, true, {}, "negative regularity"},
      {"norms.beta", K::number, 0.5, 0.0, true, {}, "positive regularity"},
      {"norms.sigma", K::number, 0.5, 0.0, false, {}, "weight exponent"},
  };
  return schema;
}

namespace {

const char* kind_name(FieldKind k) {
  switch (k) {
    case FieldKind::number: return "number";
    case FieldKind::integer: return "integer";
    case FieldKind::boolean: return "boolean";
    case FieldKind::string: return "string";
    case FieldKind::list: return "list";
  }
  return "?";
}

std::string value_text(const ConfigValue& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        std::ostringstream s;
        if constexpr (std::is_same_v<T, bool>) {
          s << (x ? "true" : "false");
        } else if constexpr (std::is_same_v<T, std::string>) {
          s << '"' << x << '"';
        } else if constexpr (std::is_same_v<T, double>) {
          s << x;
        } else {
          s << '[';
          for (std::size_t k = 0; k < x.size(); ++k) s << (k ? ", " : "") << x[k];
          s << ']';
        }
        return s.str();
      },
      v);
}

json value_json(const ConfigValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

}  // namespace

std::string schema_text() {
  std::ostringstream s;
  for (const FieldSpec& f : config_schema()) {
    s << f.path << "  " << kind_name(f.kind) << "  default " << value_text(f.fallback);
    if (!f.choices.empty()) {
      s << "  one of";
      for (const auto& c : f.choices) s << ' ' << c;
    }
    s << "  " << f.help << '\n';
  }
  return s.str();
}

Config validate_config(const Config& raw) {
  std::vector<std::string> problems;
  const auto& schema = config_schema();
  for (const auto& [path, value] : raw.entries()) {
    const bool known = std::any_of(schema.begin(), schema.end(),
                                   [&](const FieldSpec& f) { return f.path == path; });
    if (!known) problems.push_back(path + ": unknown key");
  }
  Config out = raw;
  for (const FieldSpec& f : schema) {
    if (!raw.has(f.path)) {
      out.set(f.path, f.fallback);
      continue;
    }
    const ConfigValue& v = raw.entries().at(f.path);
    switch (f.kind) {
      case FieldKind::number:
      case FieldKind::integer: {
        const double* x = std::get_if<double>(&v);
        if (!x || !std::isfinite(*x)) {
          problems.push_back(f.path + ": expected a finite " + kind_name(f.kind));
          continue;
        }
        if (f.kind == FieldKind::integer && *x != std::round(*x)) {
          problems.push_back(f.path + ": expected an integer");
          continue;
        }
        if (f.path == "grid.N" && *x != 1.0 && std::fmod(*x, 2.0) != 0.0)
          problems.push_back("grid.N: must be even (or 1)");
        if (f.min && (f.min_exclusive ? !(*x > *f.min) : !(*x >= *f.min))) {
          if (f.path == "model.lambda") {
            problems.push_back(f.path + ": lambda must be positive");
          } else {
            std::ostringstream why;
            why << f.path << ": must be " << (f.min_exclusive ? "> " : ">= ") << *f.min;
            problems.push_back(why.str());
          }
        }
        break;
      }
      case FieldKind::boolean:
        if (!std::holds_alternative<bool>(v)) problems.push_back(f.path + ": expected true or false");
        break;
      case FieldKind::string: {
        const std::string* s = std::get_if<std::string>(&v);
        if (!s) {
          problems.push_back(f.path + ": expected a quoted string");
        } else if (!f.choices.empty() &&
                   std::find(f.choices.begin(), f.choices.end(), *s) == f.choices.end()) {
          std::string list;
          for (const auto& c : f.choices) list += (list.empty() ? "" : ", ") + c;
          problems.push_back(f.path + ": '" + *s + "' is not one of " + list);
        }
        break;
      }
      case FieldKind::list:
        if (!std::holds_alternative<std::vector<double>>(v))
          problems.push_back(f.path + ": expected a list of numbers");
        break;
    }
  }
  if (problems.empty()) {
    const double steps = out.number("time.horizon") / out.number("time.dt");
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
      problems.push_back("time.horizon: must be a whole number of time.dt steps");
    for (const char* key : {"propagation.sub_L", "propagation.times", "invariance.dts"})
      for (double x : out.list(key))
        if (!(x > 0.0)) problems.push_back(std::string(key) + ": entries must be positive");
    if (out.list("invariance.dts").size() != 2) problems.push_back("invariance.dts: needs two step sizes");
    if (out.string("initial.kind") == "snapshot" && out.string("initial.path").empty())
      problems.push_back("initial.path: required when initial.kind = \"snapshot\"");
  }
  if (!problems.empty()) throw ConfigError(problems);
  return out;
}

std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, content.data(), content.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(buf, sizeof buf, "%02x", digest[k]);
    hex += buf;
  }
  return hex;
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* s = std::getenv("PHI4_SEED");
  if (!s || !*s) return std::nullopt;
  std::uint64_t x = 0;
  const char* end = s + std::strlen(s);
  const auto [ptr, ec] = std::from_chars(s, end, x);
  if (ec != std::errc() || ptr != end) throw ConfigError({"PHI4_SEED: not an unsigned integer"});
  return x;
}

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
  }
  fs::rename(tmp, path);
}

// Manifest and status files of one run.
class RunRecord {
 public:
  RunRecord(const fs::path& dir, json manifest) : dir_(dir) {
    fs::create_directories(dir_);
    write_text(dir_ / "manifest.json", manifest.dump(2) + "\n");
    status_ = {{"status", "partial"}, {"outputs", json::array()}};
    flush();
  }

  const fs::path& dir() const { return dir_; }

  void produced(const std::string& name) {
    status_["outputs"].push_back(name);
    flush();
  }
  void progress(const json& p) {
    status_["progress"] = p;
    flush();
  }
  void finish(const std::string& status, const json& summary) {
    status_["status"] = status;
    status_["summary"] = summary;
    status_.erase("progress");
    flush();
  }

 private:
  void flush() { write_text(dir_ / "status.json", status_.dump(2) + "\n"); }

  fs::path dir_;
  json status_;
};

struct Setup {
  Config config;
  std::uint64_t seed;
  int replicas;
  bool quick;
};

RngPolicy derived_policy(std::uint64_t seed, std::uint64_t tag) { return RngPolicy{splitmix64(seed ^ (tag << 32))}; }

SimConfig sim_config(const Config& c) {
  SimConfig cfg;
  cfg.lambda = c.number("model.lambda");
  cfg.mu = c.number("model.mu");
  cfg.dt = c.number("time.dt");
  cfg.horizon = c.number("time.horizon");
  cfg.scheme = parse_scheme(c.string("scheme.name"));
  cfg.dpd_symbol = c.string("scheme.symbol") == "lattice" ? Symbol::lattice : Symbol::spectral;
  cfg.split = c.string("scheme.split") == "v" ? InitialSplit::v_takes_phi0 : InitialSplit::z_takes_phi0;
  return cfg;
}

TorusGrid grid_of(const Config& c) {
  return TorusGrid(c.number("grid.L"), static_cast<int>(c.integer("grid.N")));
}

RealField initial_field(const Config& c, const TorusGrid& g, const RngPolicy& policy,
                        std::uint64_t replica) {
  const std::string& kind = c.string("initial.kind");
  if (kind == "constant") return RealField::constant(g, c.number("initial.value"));
  if (kind == "gff") {
    auto engine = policy.engine(replica, 0, Channel::initial);
    return sample_gff(g, engine);
  }
  if (kind == "snapshot") {
    RealField f = read_snapshot(c.string("initial.path"));
    if (f.grid != g) throw ConfigError({"initial.path: snapshot grid differs from [grid]"});
    return f;
  }
  return RealField(g);
}

std::string input_content(const Config& c) {
  std::string content = c.source();
  if (c.string("initial.kind") == "snapshot") {
    std::ifstream in(c.string("initial.path"), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    content += s.str();
  }
  return content;
}

json manifest_for(const std::string& command, const Setup& s, const std::vector<std::string>& outputs) {
  json config = json::object();
  for (const auto& [path, value] : s.config.entries()) config[path] = value_json(value);
  json m;
  const std::string key = command + config.dump() + std::to_string(s.seed) + std::to_string(s.replicas) +
                          (s.quick ? "q" : "");
  m["experiment_id"] = command + "-" + git_blob_hash(key).substr(0, 12);
  m["command"] = command;
  m["config"] = config;
  m["seed"] = s.seed;
  m["seed_rule"] = RngPolicy::rule();
  m["replicas"] = s.replicas;
  m["quick"] = s.quick;
  m["input_hash"] = git_blob_hash(input_content(s.config));
  m["code_version"] = PHI4_CODE_VERSION;
  m["budget_seconds"] = s.config.number("run.budget_seconds");
  m["outputs"] = outputs;
  return m;
}

std::vector<RealField> propagation_tests(const TorusGrid& g, double radius) {
  return {bump_function(g, {0.0, 0.0}, radius, 1.0), bump_function(g, {0.0, 0.0}, radius, 2.0)};
}

int cmd_simulate(const Setup& s, const fs::path& dir, std::ostream& out) {
  const Config& c = s.config;
  const TorusGrid g = grid_of(c);
  const SimConfig cfg = sim_config(c);
  cfg.validate(g);
  const RngPolicy policy{s.seed};
  const auto replica = static_cast<std::uint64_t>(c.integer("run.replica"));
  const RealField phi0 = initial_field(c, g, policy, replica);
  const long steps = std::lround(cfg.horizon / cfg.dt);
  const long snap_every = c.integer("output.snapshot_every");
  const long obs_every = c.integer("output.observables_every");
  RunRecord rec(dir, manifest_for("simulate", s, {"observables.csv", "snapshots/", "final.phi4"}));
  fs::create_directories(dir / "snapshots");

  std::ofstream obs(dir / "observables.csv");
  obs << "step,t,magnetisation,susceptibility,phi2\n";
  auto record = [&](long step, const RealField& phi) {
    const auto x = observable_sample(phi, {});
    obs << step << ',' << num(step * cfg.dt) << ',' << num(x[0]) << ',' << num(x[1]) << ',' << num(x[2])
        << '\n';
  };
  auto snapshot = [&](long step, const RealField& phi) {
    char name[64];
    std::snprintf(name, sizeof name, "snapshots/step_%08ld.phi4", step);
    write_snapshot((dir / name).string(), phi);
    rec.progress({{"step", step}, {"steps", steps}});
  };

  RealField phi = phi0;
  record(0, phi);
  try {
    if (cfg.scheme == Scheme::dpd_exponential) {
      const DpdIntegrator dpd(g, cfg);
      DpdState state = dpd.start(phi0);
      for (long k = 0; k < steps; ++k) {
        dpd.step(state, sample_slab(policy, g, cfg.dt, static_cast<std::uint64_t>(k), replica).increments);
        phi = state.phi();
        if ((k + 1) % obs_every == 0) record(k + 1, phi);
        if (snap_every > 0 && (k + 1) % snap_every == 0) snapshot(k + 1, phi);
      }
    } else {
      const LangevinIntegrator lang(g, cfg);
      for (long k = 0; k < steps; ++k) {
        lang.step(phi, sample_slab(policy, g, cfg.dt, static_cast<std::uint64_t>(k), replica).increments);
        if (!(phi.values.abs().maxCoeff() <= cfg.blowup_guard))
          throw BlowUpError("field exceeded the blow-up guard", (k + 1) * cfg.dt, phi);
        if ((k + 1) % obs_every == 0) record(k + 1, phi);
        if (snap_every > 0 && (k + 1) % snap_every == 0) snapshot(k + 1, phi);
      }
    }
  } catch (const BlowUpError& e) {
    obs.close();
    write_snapshot((dir / "blowup.phi4").string(), e.last_good());
    rec.finish("failed", {{"error", e.what()}, {"time", e.time()}});
    throw;
  }
  obs.close();
  rec.produced("observables.csv");
  write_snapshot((dir / "final.phi4").string(), phi);
  rec.produced("final.phi4");
  rec.finish("complete", {{"steps", steps}});
  out << "simulate: " << steps << " steps, output in " << dir.string() << '\n';
  return exit_pass;
}

int cmd_propagation(const Setup& s, const fs::path& dir, std::ostream& out) {
  const Config& c = s.config;
  const TorusGrid master = grid_of(c);
  SimConfig cfg = sim_config(c);
  cfg.scheme = Scheme::dpd_exponential;
  cfg.validate(master);
  const RngPolicy policy{s.seed};
  const std::vector<double>& sub_Ls = c.list("propagation.sub_L");
  const std::vector<double>& times = c.list("propagation.times");
  for (double L : sub_Ls) sub_grid_offset(master, L);
  const auto tests = propagation_tests(master, c.number("propagation.test_radius"));
  if (sub_Ls.empty() || times.empty()) throw ConfigError({"propagation: sub_L and times must be non-empty"});
  const double min_L = *std::min_element(sub_Ls.begin(), sub_Ls.end());
  if (c.number("propagation.test_radius") > 2.0 / 3.0 * min_L)
    throw ConfigError({"propagation.test_radius: must be at most 2/3 of the smallest sub_L"});
  const RealField phi0 = initial_field(c, master, policy, 0);
  RunRecord rec(dir, manifest_for("propagation", s, {"propagation.csv", "propagation_summary.json"}));
  const CoupledResult res = coupled_run(phi0, cfg, sub_Ls, times, tests, s.replicas, policy);

  std::ofstream csv(dir / "propagation.csv");
  csv << "L,t,test,delta,delta_error,pathwise,pathwise_error\n";
  for (const CoupledRow& row : res.rows)
    for (std::size_t i = 0; i < tests.size(); ++i)
      csv << num(row.half_length) << ',' << num(row.t) << ',' << i << ',' << num(row.delta[i]) << ','
          << num(row.delta_error[i]) << ',' << num(row.pathwise[i]) << ',' << num(row.pathwise_error[i])
          << '\n';
  csv.close();
  rec.produced("propagation.csv");

  bool monotone = true;
  std::vector<double> x;
  std::vector<double> y;
  for (double t : times) {
    for (std::size_t i = 0; i < tests.size(); ++i) {
      std::vector<std::pair<double, std::pair<double, double>>> by_L;
      for (const CoupledRow& row : res.rows)
        if (row.t == t) by_L.push_back({row.half_length, {row.delta[i], row.delta_error[i]}});
      std::sort(by_L.begin(), by_L.end());
      std::vector<double> d;
      std::vector<double> e;
      for (const auto& [L, de] : by_L) {
        d.push_back(de.first);
        e.push_back(de.second);
        if (de.first > 3.0 * de.second) {
          x.push_back(L * L / t);
          y.push_back(std::log(de.first));
        }
      }
      monotone = monotone && decreasing_until_floor(d, e);
    }
  }
  json summary{{"monotone_in_L", monotone}};
  if (x.size() >= 3) summary["log_delta_vs_L2_over_t_slope"] = linear_fit(x, y).slope;
  write_text(dir / "propagation_summary.json", summary.dump(2) + "\n");
  rec.produced("propagation_summary.json");
  rec.finish("complete", summary);
  out << "propagation: monotone in L: " << (monotone ? "yes" : "no") << '\n';
  return monotone ? exit_pass : exit_failure;
}

int cmd_entropy(const Setup& s, const fs::path& dir, std::ostream& out) {
  const Config& c = s.config;
  const TorusGrid g = grid_of(c);
  const double t = c.number("entropy.t");
  const DriftSpec drift{c.number("model.lambda"), c.number("model.mu")};
  SimConfig cfg = sim_config(c);
  cfg.scheme = Scheme::dpd_exponential;
  cfg.mu = drift.spde_mu();
  cfg.horizon = t;
  cfg.validate(g);
  const long steps = std::lround(t / cfg.dt);
  if (steps < 2 || std::abs(steps * cfg.dt - t) > 1e-9 * t)
    throw ConfigError({"entropy.t: must be at least two whole steps of time.dt"});
  const int quick_div = s.quick ? 4 : 1;
  const int samples = std::max(2, static_cast<int>(c.integer("entropy.samples")) / quick_div);
  const int gff_samples = std::max(2, static_cast<int>(c.integer("entropy.gff_samples")) / quick_div);
  const int paths = std::max(2, static_cast<int>(c.integer("entropy.girsanov_replicas")) / quick_div);
  const RealField phi0 = initial_field(c, g, RngPolicy{s.seed}, 0);
  RunRecord rec(dir, manifest_for("entropy", s, {"entropy.json", "entropy.csv"}));

  const RngPolicy dyn_policy = derived_policy(s.seed, 1);
  const DpdIntegrator dpd(g, cfg);
  std::vector<RealField> dynamics;
  for (int r = 0; r < samples; ++r) {
    DpdState st = dpd.start(phi0);
    for (long k = 0; k < steps; ++k)
      dpd.step(st, sample_slab(dyn_policy, g, cfg.dt, static_cast<std::uint64_t>(k),
                               static_cast<std::uint64_t>(r)).increments);
    dynamics.push_back(st.phi());
  }
  rec.progress({{"stage", "dynamics samples"}});
  const GaussianRelentTerms gauss = gaussian_relent_terms(t, phi0, dynamics);

  GirsanovOptions go;
  go.t = t;
  go.dt = cfg.dt;
  go.replicas = paths;
  go.symbol = cfg.dpd_symbol;
  const Estimate girsanov = girsanov_entropy_bound(drift, phi0, go, derived_policy(s.seed, 2));
  rec.progress({{"stage", "girsanov"}});

  const RngPolicy gff_policy = derived_policy(s.seed, 3);
  std::vector<RealField> gff;
  for (int r = 0; r < gff_samples; ++r) {
    auto engine = gff_policy.engine(static_cast<std::uint64_t>(r), 0, Channel::initial);
    gff.push_back(sample_gff(g, engine));
  }
  const PotentialTerms pot = potential_terms(drift.lambda, drift.spde_mu(), cfg.counterterm(g), gff, dynamics);

  EntropyReport report;
  report.terms = {{"girsanov_bound", girsanov.value, girsanov.error, false},
                  {"fredholm", gauss.fredholm, 0.0, true},
                  {"mean_quadratic", gauss.mean_quadratic, 0.0, true},
                  {"quadratic", gauss.quadratic.value, gauss.quadratic.error, false},
                  {"cross", gauss.cross.value, gauss.cross.error, false},
                  {"mean_potential", pot.mean_potential.value, pot.mean_potential.error, false},
                  {"log_partition", pot.log_partition.value, pot.log_partition.error, false}};
  report.log_partition_unreliable = pot.unreliable;
  json j = json::parse(report.to_json());
  const double total = report.total();
  const bool finite = std::isfinite(total);
  j["effective_sample_size"] = pot.effective_sample_size;
  j["fredholm_nonnegative"] = gauss.fredholm >= 0.0;
  if (finite && total >= 0.0) j["pinsker_tv_bound"] = pinsker_tv_bound(total);
  write_text(dir / "entropy.json", j.dump(2) + "\n");
  rec.produced("entropy.json");
  std::ofstream csv(dir / "entropy.csv");
  csv << "term,value,stderr,provenance\n";
  for (const EntropyTerm& term : report.terms)
    csv << term.name << ',' << num(term.value) << ',' << num(term.error) << ','
        << (term.exact ? "exact" : "mc") << '\n';
  csv << "total," << num(total) << ",,sum\n";
  csv.close();
  rec.produced("entropy.csv");
  const bool ok = finite && gauss.fredholm >= 0.0;
  rec.finish(ok ? "complete" : "failed", {{"total_upper_bound", total}});
  out << "entropy: total upper bound " << total << (pot.unreliable ? " (log-partition unreliable)" : "")
      << '\n';
  return ok ? exit_pass : exit_failure;
}

int cmd_invariance(const Setup& s, const fs::path& dir, std::ostream& out) {
  const Config& c = s.config;
  const TorusGrid g = grid_of(c);
  SimConfig cfg = sim_config(c);
  cfg.scheme = Scheme::langevin_exponential;
  cfg.validate(g);
  InvarianceOptions o;
  o.dts = c.list("invariance.dts");
  o.burn = c.number("invariance.burn");
  o.span = c.number("invariance.span") / (s.quick ? 4.0 : 1.0);
  o.record_every = c.number("invariance.record_every");
  o.mala_samples = std::max(2L, c.integer("invariance.mala_samples") / (s.quick ? 4 : 1));
  o.mala_thin = c.integer("invariance.mala_thin");
  o.mala_burn = c.integer("invariance.mala_burn");
  const double R = std::min(1.0, 0.5 * g.half_length());
  const std::vector<RealField> tests{bump_function(g, {0.0, 0.0}, R),
                                     gaussian_function(g, {0.5 * R, 0.5 * R}, 0.7 * R, 0.5)};
  RunRecord rec(dir, manifest_for("invariance", s, {"invariance.csv"}));
  const InvarianceStudy study = invariance_study(g, cfg, o, tests, RngPolicy{s.seed});
  std::ofstream csv(dir / "invariance.csv");
  csv << "observable,langevin_dt1,error_dt1,langevin_dt2,error_dt2,extrapolated,mala,mala_error,sigma,z\n";
  bool ok = study.mala.warnings.empty();
  for (const InvarianceRow& row : study.rows) {
    csv << row.observable << ',' << num(row.langevin[0].value) << ',' << num(row.langevin[0].error) << ','
        << num(row.langevin[1].value) << ',' << num(row.langevin[1].error) << ',' << num(row.extrapolated)
        << ',' << num(row.mala.value) << ',' << num(row.mala.error) << ',' << num(row.sigma) << ','
        << num(row.z) << '\n';
    ok = ok && std::abs(row.z) <= 3.0;
  }
  csv.close();
  rec.produced("invariance.csv");
  rec.finish("complete", {{"agree_within_3_sigma", ok},
                          {"mala_acceptance", study.mala.acceptance},
                          {"mala_warnings", study.mala.warnings}});
  out << "invariance: " << (ok ? "agree" : "disagree") << " within 3 sigma\n";
  return ok ? exit_pass : exit_failure;
}

int cmd_norms(const Setup& s, const fs::path& dir, std::ostream& out) {
  const Config& c = s.config;
  const TorusGrid g = grid_of(c);
  const int n = std::max(2, static_cast<int>(c.integer("norms.samples")) / (s.quick ? 4 : 1));
  RunRecord rec(dir, manifest_for("norms", s, {"norms.csv"}));
  const auto reports = norm_suite(g, n, c.number("norms.alpha"), c.number("norms.beta"),
                                  c.number("norms.sigma"), RngPolicy{s.seed});
  std::ofstream csv(dir / "norms.csv");
  write_report_csv(csv, reports);
  csv.close();
  rec.produced("norms.csv");
  bool ok = true;
  for (const auto& r : reports) {
    ok = ok && r.pass;
    out << "norms: " << r.inequality << (r.pass ? " pass" : " FAIL") << '\n';
  }
  rec.finish("complete", {{"pass", ok}});
  return ok ? exit_pass : exit_failure;
}

int cmd_checks(const Setup& s, const RunContext& ctx, const fs::path& dir, std::ostream& out) {
  const std::vector<int> ids = suite_checks(ctx.suite);
  CheckOptions o;
  o.quick = s.quick;
  o.seed = s.seed;
  o.replicas = ctx.replicas;
  RunRecord rec(dir, manifest_for("checks", s, {"checks.json", "checks.csv"}));
  json results = json::array();
  std::ofstream csv(dir / "checks.csv");
  csv << "id,name,pass,summary\n";
  bool all = true;
  for (int id : ids) {
    const CheckResult r = run_check(id, o);
    all = all && r.pass;
    out << '[' << (r.pass ? "PASS" : "FAIL") << "] " << r.id << ' ' << r.name << ": " << r.summary << '\n';
    out.flush();
    csv << r.id << ',' << r.name << ',' << (r.pass ? "pass" : "fail") << ",\"" << r.summary << "\"\n";
    results.push_back({{"id", r.id}, {"name", r.name}, {"pass", r.pass}, {"seconds", r.seconds},
                       {"budget_seconds", r.budget_seconds}, {"summary", r.summary}, {"stats", r.stats}});
    rec.progress({{"done", results.size()}, {"of", ids.size()}});
  }
  csv.close();
  write_text(dir / "checks.json", json{{"suite", ctx.suite}, {"pass", all}, {"checks", results}}.dump(2) + "\n");
  rec.produced("checks.csv");
  rec.produced("checks.json");
  rec.finish("complete", {{"pass", all}});
  return all ? exit_pass : exit_failure;
}

}  // namespace

int run_command(const std::string& command, const Config& config, const RunContext& ctx,
                std::ostream& out, std::ostream& err) {
  static const std::vector<std::string> commands{"simulate", "propagation", "entropy",
                                                 "invariance", "norms", "checks"};
  if (std::find(commands.begin(), commands.end(), command) == commands.end()) {
    err << "error: unknown command '" << command << "'\n";
    return exit_config;
  }
  Setup s{Config{}, 0, 0, ctx.quick};
  try {
    s.config = validate_config(config);
    if (command == "checks") suite_checks(ctx.suite);
    s.seed = static_cast<std::uint64_t>(s.config.integer("run.seed"));
    if (const auto env = seed_from_environment()) s.seed = *env;
    if (ctx.seed) s.seed = *ctx.seed;
    s.replicas = ctx.replicas > 0 ? ctx.replicas : static_cast<int>(s.config.integer("run.replicas"));
    if (ctx.quick && ctx.replicas <= 0) s.replicas = std::max(2, s.replicas / 4);
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems()) err << "config error: " << p << '\n';
    return exit_config;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  }
  const auto start = std::chrono::steady_clock::now();
  int code = exit_pass;
  try {
    const fs::path dir = ctx.out_dir;
    if (command == "simulate") code = cmd_simulate(s, dir, out);
    if (command == "propagation") code = cmd_propagation(s, dir, out);
    if (command == "entropy") code = cmd_entropy(s, dir, out);
    if (command == "invariance") code = cmd_invariance(s, dir, out);
    if (command == "norms") code = cmd_norms(s, dir, out);
    if (command == "checks") code = cmd_checks(s, ctx, dir, out);
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems()) err << "config error: " << p << '\n';
    return exit_config;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_failure;
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (elapsed > s.config.number("run.budget_seconds"))
    err << "warning: run took " << elapsed << " s, over the budget of "
        << s.config.number("run.budget_seconds") << " s\n";
  return code;
}

}  // namespace phi4
