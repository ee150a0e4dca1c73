#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "sumalign/error.hpp"

namespace sumalign::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

RunConfig::RunConfig(std::string subcommand, std::vector<KeySpec> keys)
    : subcommand_(std::move(subcommand)), keys_(std::move(keys)) {
  for (const auto& k : keys_)
    if (!k.default_value.empty()) values_[k.key] = k.default_value;
}

const KeySpec& RunConfig::spec(const std::string& key) const {
  for (const auto& k : keys_)
    if (k.key == key) return k;
  throw UsageError("'" + subcommand_ + "' has no setting '" + key + "'");
}

void RunConfig::set_flag(const std::string& key, const std::string& value) {
  spec(key);
  values_[key] = value;
  from_flag_[key] = true;
}

void RunConfig::merge_file(const std::map<std::string, std::string>& file, const std::string& source) {
  for (const auto& [k, v] : file) {
    if (!knows(k)) throw UsageError(source + ": unknown key '" + k + "' for '" + subcommand_ + "'");
    if (!from_flag_.count(k)) values_[k] = v;
  }
}

void RunConfig::check_required() const {
  for (const auto& k : keys_)
    if (k.required && !has(k.key)) throw UsageError("missing required setting '" + k.key + "' for '" + subcommand_ + "'");
}

bool RunConfig::knows(const std::string& key) const {
  return std::any_of(keys_.begin(), keys_.end(), [&](const KeySpec& s) { return s.key == key; });
}

bool RunConfig::has(const std::string& key) const {
  spec(key);
  const auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

std::string RunConfig::str(const std::string& key) const {
  spec(key);
  const auto it = values_.find(key);
  return it == values_.end() ? std::string() : it->second;
}

std::optional<std::filesystem::path> RunConfig::path(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return std::filesystem::path(str(key));
}

int RunConfig::integer(const std::string& key) const {
  const auto s = str(key);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw UsageError("setting '" + key + "' needs an integer, got '" + s + "'");
  return v;
}

double RunConfig::real(const std::string& key) const {
  const auto s = str(key);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw UsageError("setting '" + key + "' needs a number, got '" + s + "'");
  return v;
}

bool RunConfig::boolean(const std::string& key) const {
  const auto s = str(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no" || s.empty()) return false;
  throw UsageError("setting '" + key + "' needs true or false, got '" + s + "'");
}

std::string RunConfig::echo() const {
  std::ostringstream out;
  out << "# sumalign " << subcommand_ << '\n';
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
  return out.str();
}

void RunConfig::write_echo(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write '" + file.string() + "'");
  out << echo();
}

std::map<std::string, std::string> parse_config_text(std::string_view text, const std::string& source) {
  std::map<std::string, std::string> out;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    const auto where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw UsageError(where + ": expected key = value");
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw UsageError(where + ": empty key");
    if (!out.emplace(key, value).second) throw UsageError(where + ": duplicate key '" + key + "'");
  }
  return out;
}

std::map<std::string, std::string> load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

}  // namespace sumalign::cli
