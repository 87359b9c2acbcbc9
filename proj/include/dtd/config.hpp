#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dtd {

// Raised for malformed or incomplete configuration input. Messages carry
// the file, line, and key involved so the CLI can report them verbatim.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Flat "key = value" file with [section] headers and '#' comments.
// Matrix values separate rows with ';' and row entries with whitespace.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text,
                             const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section,
                         const std::string& key) const;
  double get_double(const std::string& section, const std::string& key) const;
  long get_int(const std::string& section, const std::string& key) const;
  std::uint64_t get_u64(const std::string& section,
                        const std::string& key) const;
  bool get_bool(const std::string& section, const std::string& key) const;
  Eigen::MatrixXd get_matrix(const std::string& section,
                             const std::string& key) const;
  Eigen::VectorXd get_vector(const std::string& section,
                             const std::string& key) const;
  std::vector<double> get_double_list(const std::string& section,
                                      const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& section,
                                           const std::string& key) const;

  std::string get_string_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const;
  double get_double_or(const std::string& section, const std::string& key,
                       double fallback) const;
  long get_int_or(const std::string& section, const std::string& key,
                  long fallback) const;
  std::uint64_t get_u64_or(const std::string& section, const std::string& key,
                           std::uint64_t fallback) const;
  bool get_bool_or(const std::string& section, const std::string& key,
                   bool fallback) const;

  std::vector<std::string> sections() const;
  std::vector<std::string> keys(const std::string& section) const;
  const std::string& origin() const { return origin_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };

  const Entry& require(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const Entry& entry, const std::string& section,
                         const std::string& key, const std::string& why) const;

  std::map<std::string, std::map<std::string, Entry>> data_;
  std::string origin_;
};

}  // namespace dtd
