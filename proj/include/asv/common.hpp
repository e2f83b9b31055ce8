#pragma once

#include <Eigen/Dense>

#include <map>
#include <stdexcept>
#include <string>

namespace asv {

// NED plane vector: x() = north [m], y() = east [m].
using Vec2 = Eigen::Vector2d;

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kNauticalMile = 1852.0;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Raised for malformed or incomplete configuration input.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Flat key-value text config: `key = value` lines, `#` comments,
/// order-insensitive. Values stay strings until queried.
class KeyValueFile {
 public:
  KeyValueFile() = default;

  static KeyValueFile load(const std::string& path);
  static KeyValueFile parse(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  /// Missing keys are hard errors naming the key.
  double get_real(const std::string& key) const;
  double get_real(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

  /// Rejects keys outside the allowed set (typo guard at CLI boundaries).
  void require_known(const std::initializer_list<std::string>& allowed) const;

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
};

}  // namespace asv
