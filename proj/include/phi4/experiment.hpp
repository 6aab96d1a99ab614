#ifndef PHI4_EXPERIMENT_HPP
#define PHI4_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace phi4 {

/// Configuration problems, one entry per offending field path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

using ConfigValue = std::variant<bool, double, std::string, std::vector<double>>;

/// Flat TOML-like file: "[section]" headers, "key = value" lines with numbers,
/// true/false, "quoted strings" and [1, 2, 3] number lists; '#' comments.
/// Keys are addressed as "section.key".
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& path) const { return entries_.count(path) != 0; }
  double number(const std::string& path) const;
  long integer(const std::string& path) const;
  bool boolean(const std::string& path) const;
  const std::string& string(const std::string& path) const;
  const std::vector<double>& list(const std::string& path) const;

  void set(const std::string& path, ConfigValue value) { entries_[path] = std::move(value); }
  const std::map<std::string, ConfigValue>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

 private:
  std::map<std::string, ConfigValue> entries_;
  std::string source_;
};

enum class FieldKind { number, integer, boolean, string, list };

struct FieldSpec {
  std::string path;
  FieldKind kind;
  ConfigValue fallback;
  std::optional<double> min;
  bool min_exclusive = false;
  std::vector<std::string> choices;
  std::string help;
};

const std::vector<FieldSpec>& config_schema();
/// The schema as "path  kind  default  help" lines.
std::string schema_text();

/// Fills defaults and checks types, ranges, choices and unknown keys; throws
/// ConfigError listing every problem.
Config validate_config(const Config& raw);

struct RunContext {
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;  // overrides run.seed
  int replicas = 0;                   // overrides run.replicas when > 0
  bool quick = false;
  std::string suite = "all";          // for `checks`
};

/// Exit codes of run_command.
constexpr int exit_pass = 0;
constexpr int exit_failure = 1;
constexpr int exit_config = 2;

/// Runs one of simulate, propagation, entropy, invariance, norms, checks.
/// Writes manifest.json and status.json before computing; status.json says
/// "partial" until the run completes. Result lines go to `out`, errors to `err`.
int run_command(const std::string& command, const Config& config, const RunContext& ctx,
                std::ostream& out, std::ostream& err);

/// Git blob hash (SHA-1 of "blob <size>\0" + content), lowercase hex.
std::string git_blob_hash(const std::string& content);

/// Environment override of the seed (PHI4_SEED), if set and valid.
std::optional<std::uint64_t> seed_from_environment();

}  // namespace phi4

#endif  // PHI4_EXPERIMENT_HPP
