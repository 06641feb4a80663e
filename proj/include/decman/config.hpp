#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace decman {

/// Flat dotted-key configuration. Every key has a default; unknown keys are
/// rejected. Keys under "summary." are output-only and skipped on parse, so a
/// manifest can be fed back in as a config.
class Config {
 public:
  struct Key {
    const char* name;
    const char* default_value;
    const char* help;
  };

  /// Known keys in manifest order.
  static const std::vector<Key>& keys();
  static bool known(const std::string& key);

  Config();

  /// "key = value" lines; blank lines and '#' comments ignored.
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  /// "key=value".
  void assign(const std::string& assignment);

  const std::string& get(const std::string& key) const;
  bool empty(const std::string& key) const { return get(key).empty(); }
  long get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;

  /// All keys in manifest order, one "key = value" per line.
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace decman
