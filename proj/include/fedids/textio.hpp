#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fedids::textio {

// Shortest representation that parses back to the identical double.
std::string format_shortest(double value);

// Fixed 17 significant digits; also round-trips bit-exactly.
std::string format_17g(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);
std::optional<std::uint64_t> parse_uint(std::string_view text);

std::string_view trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
std::vector<std::string> split_whitespace(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// Flat `key = value` document. Blank lines and lines starting with '#' are
// ignored; key order is preserved on output.
class KeyValueDoc {
 public:
  static KeyValueDoc parse(std::string_view text);
  static KeyValueDoc load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value);
  void set_number(const std::string& key, double value);
  void set_numbers(const std::string& key, const std::vector<double>& values);

  bool contains(const std::string& key) const;
  const std::vector<std::string>& keys() const { return order_; }

  // Lookups throw MalformedDocument when the key is missing or unparsable.
  const std::string& get(const std::string& key) const;
  double get_number(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::vector<double> get_numbers(const std::string& key) const;

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

}  // namespace fedids::textio
