#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sumalign::cli {

// Bad flags, unknown config keys, malformed values. Exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeySpec {
  std::string key;
  std::string default_value;  // empty: unset
  bool required = false;
  std::string help;
};

// Resolved key=value settings for one subcommand. Flags beat the config file,
// which beats the defaults.
class RunConfig {
 public:
  RunConfig(std::string subcommand, std::vector<KeySpec> keys);

  const std::string& subcommand() const { return subcommand_; }
  const std::vector<KeySpec>& keys() const { return keys_; }

  void set_flag(const std::string& key, const std::string& value);
  // Fills keys that no flag set; unknown keys are a UsageError.
  void merge_file(const std::map<std::string, std::string>& file, const std::string& source);
  // Throws UsageError naming the first missing required key.
  void check_required() const;

  // Whether this subcommand defines `key` at all.
  bool knows(const std::string& key) const;
  bool has(const std::string& key) const;
  std::string str(const std::string& key) const;
  std::optional<std::filesystem::path> path(const std::string& key) const;
  int integer(const std::string& key) const;
  double real(const std::string& key) const;
  bool boolean(const std::string& key) const;

  // Sorted key=value lines headed by the subcommand name.
  std::string echo() const;
  void write_echo(const std::filesystem::path& file) const;

 private:
  const KeySpec& spec(const std::string& key) const;

  std::string subcommand_;
  std::vector<KeySpec> keys_;
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> from_flag_;
};

// `key = value` lines; '#' starts a comment line. Duplicate keys are errors.
std::map<std::string, std::string> parse_config_text(std::string_view text, const std::string& source);
std::map<std::string, std::string> load_config_file(const std::filesystem::path& path);

}  // namespace sumalign::cli
