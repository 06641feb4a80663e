#include "decman/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "decman/errors.hpp"
#include "decman/matrix_io.hpp"

namespace decman {

const std::vector<Config::Key>& Config::keys() {
  static const std::vector<Key> table = {
      {"problem.kind", "pca", "pca | gevp | lrmc"},
      {"problem.n", "8", "number of agents"},
      {"problem.m_i", "1000", "pca/gevp: samples per agent"},
      {"problem.d", "10", "pca/gevp: ambient dimension"},
      {"problem.r", "5", "target rank / number of columns"},
      {"problem.xi", "0.8", "pca/gevp: singular value decay"},
      {"problem.scale", "0", "pca/gevp: singular value multiplier, 0 = sqrt(n m_i)"},
      {"problem.seed", "1", "data generator seed"},
      {"problem.m", "100", "lrmc: rows"},
      {"problem.T", "1000", "lrmc: columns"},
      {"problem.nu", "0", "lrmc: observation probability, 0 = r(m+T-r)/(mT)"},
      {"problem.lambda_exponents", "", "gevp: comma list of exponents of 1.1 for B"},
      {"problem.path", "", "dataset bundle directory written by gen-data"},
      {"problem.data", "", "pca: dense data matrix file, rows split over agents"},
      {"problem.format", "csv", "format of problem.data: csv | raw-binary"},
      {"problem.data_scale", "1", "divide problem.data entries by this"},
      {"manifold.gamma", "", "gevp: proximal smoothness parameter, empty = 0.5 / lambda_max(B)"},
      {"graph.topology", "ring", "ring | complete | er"},
      {"graph.p", "0.6", "er: edge probability"},
      {"graph.seed", "1", "er: graph seed"},
      {"graph.path", "", "edge list file, overrides topology"},
      {"algo.kind", "dprgt", "consensus | dprgd | dprgt"},
      {"algo.t", "1", "gossip rounds per iteration, or auto"},
      {"algo.step", "sample",
       "constant (beta) | sample (beta n / sum m_i) | agents (beta n) | horizon (beta / sqrt K) | "
       "diminishing (beta / sqrt(k+1)) | theory (beta min(gamma / 24L, 1) / sqrt(k+1))"},
      {"algo.beta", "0.3", "step size parameter"},
      {"run.K", "1000", "iterations"},
      {"run.seed", "1", "initialization seed"},
      {"run.trace_every", "1", "record every this many iterations"},
      {"run.eps", "", "stop when consensus error and grad_norm_sq are both below this"},
      {"init.mode", "identical", "identical | perturbed"},
      {"init.delta", "0", "perturbed: tangent perturbation norm"},
      {"metrics.per_agent_distance", "false", "also record mean per-agent distance to truth"},
      {"out.dir", "out", "output directory"},
      {"out.wall_clock", "false", "record elapsed time in the trace (breaks byte-identity)"},
      {"out.save_points", "false", "write final agent points as CSV matrices"},
      {"sweep.betas", "", "sweep: comma list of beta candidates"},
      {"sweep.metric", "grad_norm_sq", "sweep: grad_norm_sq | objective"},
  };
  return table;
}

bool Config::known(const std::string& key) {
  const auto& t = keys();
  return std::any_of(t.begin(), t.end(), [&](const Key& k) { return key == k.name; });
}

Config::Config() {
  for (const auto& k : keys()) values_[k.name] = k.default_value;
}

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("config: expected 'key = value'", lineno);
    const std::string key = trim(line.substr(0, eq));
    if (key.rfind("summary.", 0) == 0) continue;
    cfg.set(key, trim(line.substr(eq + 1)));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("--config", "cannot open '" + path.string() + "'");
  }
  return parse(read_file(path));
}

void Config::set(const std::string& key, const std::string& value) {
  if (!known(key)) throw ConfigError(key, "unknown key");
  values_[key] = value;
}

void Config::assign(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(assignment, "expected key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown key");
  return it->second;
}

long Config::get_int(const std::string& key) const {
  const std::string& s = get(key);
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(key, "expected an integer, got '" + s + "'");
  }
  return v;
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const std::string& s = get(key);
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError(key, "expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

namespace {

std::optional<double> to_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

}  // namespace

double Config::get_double(const std::string& key) const {
  const auto v = to_double(get(key));
  if (!v) throw ConfigError(key, "expected a number, got '" + get(key) + "'");
  return *v;
}

std::optional<double> Config::get_optional_double(const std::string& key) const {
  if (empty(key)) return std::nullopt;
  return get_double(key);
}

bool Config::get_bool(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off" || s.empty()) return false;
  throw ConfigError(key, "expected true or false, got '" + s + "'");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  const std::string& s = get(key);
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = s.find(',', start);
    const std::string item = trim(s.substr(start, comma == std::string::npos ? comma : comma - start));
    const auto v = to_double(item);
    if (!v) throw ConfigError(key, "bad list entry '" + item + "'");
    out.push_back(*v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string Config::to_text() const {
  std::string out;
  for (const auto& k : keys()) {
    out += k.name;
    out += " = ";
    out += values_.at(k.name);
    out.push_back('\n');
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace decman
