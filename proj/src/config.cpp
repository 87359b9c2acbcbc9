#include "dtd/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace dtd {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

// List values accept either whitespace or comma separation.
std::vector<std::string> split_list(const std::string& s) {
  std::string spaced = s;
  for (char& c : spaced) {
    if (c == ',') c = ' ';
  }
  return split_ws(spaced);
}

bool parse_double_token(const std::string& tok, double& out) {
  errno = 0;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size() && !tok.empty() && errno == 0;
}

}  // namespace

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

Config Config::parse_string(const std::string& text,
                            const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                          ": malformed section header '" + line + "'");
      }
      section = trim(line.substr(1, line.size() - 2));
      cfg.data_[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": empty key");
    }
    if (section.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": key '" +
                        key + "' appears before any [section] header");
    }
    auto& sec = cfg.data_[section];
    if (sec.count(key)) {
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": duplicate key '" + key + "' in [" + section + "]");
    }
    sec[key] = Entry{trim(line.substr(eq + 1)), line_no};
  }
  return cfg;
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto sec = data_.find(section);
  return sec != data_.end() && sec->second.count(key) > 0;
}

const Config::Entry& Config::require(const std::string& section,
                                     const std::string& key) const {
  auto sec = data_.find(section);
  if (sec == data_.end()) {
    throw ConfigError(origin_ + ": missing section [" + section +
                      "] (wanted key '" + key + "')");
  }
  auto it = sec->second.find(key);
  if (it == sec->second.end()) {
    throw ConfigError(origin_ + ": missing key '" + key + "' in [" + section +
                      "]");
  }
  return it->second;
}

void Config::fail(const Entry& entry, const std::string& section,
                  const std::string& key, const std::string& why) const {
  throw ConfigError(origin_ + ":" + std::to_string(entry.line) + ": key '" +
                    key + "' in [" + section + "]: " + why + ", got '" +
                    entry.value + "'");
}

std::string Config::get_string(const std::string& section,
                               const std::string& key) const {
  return require(section, key).value;
}

double Config::get_double(const std::string& section,
                          const std::string& key) const {
  const Entry& e = require(section, key);
  double v = 0.0;
  if (!parse_double_token(e.value, v)) fail(e, section, key, "expected number");
  return v;
}

long Config::get_int(const std::string& section, const std::string& key) const {
  const Entry& e = require(section, key);
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(e.value.c_str(), &end, 10);
  if (end != e.value.c_str() + e.value.size() || e.value.empty() || errno != 0) {
    fail(e, section, key, "expected integer");
  }
  return v;
}

std::uint64_t Config::get_u64(const std::string& section,
                              const std::string& key) const {
  const Entry& e = require(section, key);
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(e.value.c_str(), &end, 10);
  if (end != e.value.c_str() + e.value.size() || e.value.empty() ||
      errno != 0 || e.value.front() == '-') {
    fail(e, section, key, "expected unsigned integer");
  }
  return v;
}

bool Config::get_bool(const std::string& section, const std::string& key) const {
  const Entry& e = require(section, key);
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  fail(e, section, key, "expected boolean (true/false)");
}

Eigen::MatrixXd Config::get_matrix(const std::string& section,
                                   const std::string& key) const {
  const Entry& e = require(section, key);
  std::vector<std::vector<double>> rows;
  std::string row_text;
  std::istringstream in(e.value);
  while (std::getline(in, row_text, ';')) {
    std::vector<double> row;
    for (const std::string& tok : split_ws(row_text)) {
      double v = 0.0;
      if (!parse_double_token(tok, v)) {
        fail(e, section, key, "expected matrix entry number in '" + tok + "'");
      }
      row.push_back(v);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(e, section, key, "expected matrix");
  const std::size_t cols = rows.front().size();
  for (const auto& row : rows) {
    if (row.size() != cols) {
      fail(e, section, key, "expected rectangular matrix (ragged rows)");
    }
  }
  Eigen::MatrixXd m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
    }
  }
  return m;
}

Eigen::VectorXd Config::get_vector(const std::string& section,
                                   const std::string& key) const {
  const Eigen::MatrixXd m = get_matrix(section, key);
  if (m.rows() == 1) return m.row(0).transpose();
  if (m.cols() == 1) return m.col(0);
  const Entry& e = require(section, key);
  fail(e, section, key, "expected vector (one row or one column)");
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key) const {
  const Entry& e = require(section, key);
  std::vector<double> out;
  for (const std::string& tok : split_list(e.value)) {
    double v = 0.0;
    if (!parse_double_token(tok, v)) {
      fail(e, section, key, "expected number list entry in '" + tok + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) fail(e, section, key, "expected non-empty list");
  return out;
}

std::vector<std::string> Config::get_string_list(const std::string& section,
                                                 const std::string& key) const {
  const Entry& e = require(section, key);
  std::vector<std::string> out = split_list(e.value);
  if (out.empty()) fail(e, section, key, "expected non-empty list");
  return out;
}

std::string Config::get_string_or(const std::string& section,
                                  const std::string& key,
                                  const std::string& fallback) const {
  return has(section, key) ? get_string(section, key) : fallback;
}

double Config::get_double_or(const std::string& section, const std::string& key,
                             double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long Config::get_int_or(const std::string& section, const std::string& key,
                        long fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

std::uint64_t Config::get_u64_or(const std::string& section,
                                 const std::string& key,
                                 std::uint64_t fallback) const {
  return has(section, key) ? get_u64(section, key) : fallback;
}

bool Config::get_bool_or(const std::string& section, const std::string& key,
                         bool fallback) const {
  return has(section, key) ? get_bool(section, key) : fallback;
}

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  for (const auto& [name, entries] : data_) out.push_back(name);
  return out;
}

std::vector<std::string> Config::keys(const std::string& section) const {
  std::vector<std::string> out;
  auto sec = data_.find(section);
  if (sec == data_.end()) return out;
  for (const auto& [name, entry] : sec->second) out.push_back(name);
  return out;
}

}  // namespace dtd
