#include "fedids/textio.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fedids/error.hpp"

namespace fedids::textio {

std::string format_shortest(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), end);
}

std::string format_17g(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::general, 17);
  return std::string(buf.data(), end);
}

namespace {

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

}  // namespace

std::optional<double> parse_double(std::string_view text) { return parse_number<double>(text); }
std::optional<std::int64_t> parse_int(std::string_view text) {
  return parse_number<std::int64_t>(text);
}
std::optional<std::uint64_t> parse_uint(std::string_view text) {
  return parse_number<std::uint64_t>(text);
}

std::string_view trim(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) {
    text.remove_prefix(1);
  }
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) {
    text.remove_suffix(1);
  }
  return text;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      break;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

KeyValueDoc KeyValueDoc::parse(std::string_view text) {
  KeyValueDoc doc;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::MalformedDocument,
                  "line " + std::to_string(line_no) + " has no '='");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) {
      throw Error(ErrorCode::MalformedDocument, "line " + std::to_string(line_no) + " has no key");
    }
    doc.set(key, std::string(trim(line.substr(eq + 1))));
  }
  return doc;
}

KeyValueDoc KeyValueDoc::load(const std::filesystem::path& path) { return parse(read_file(path)); }

void KeyValueDoc::set(const std::string& key, std::string value) {
  if (!values_.contains(key)) order_.push_back(key);
  values_[key] = std::move(value);
}

void KeyValueDoc::set_number(const std::string& key, double value) { set(key, format_17g(value)); }

void KeyValueDoc::set_numbers(const std::string& key, const std::vector<double>& values) {
  std::string joined;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) joined += ' ';
    joined += format_17g(values[i]);
  }
  set(key, std::move(joined));
}

bool KeyValueDoc::contains(const std::string& key) const { return values_.contains(key); }

const std::string& KeyValueDoc::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::MalformedDocument, "missing key '" + key + "'");
  return it->second;
}

double KeyValueDoc::get_number(const std::string& key) const {
  auto v = parse_double(get(key));
  if (!v) throw Error(ErrorCode::MalformedDocument, "key '" + key + "' is not a number");
  return *v;
}

std::int64_t KeyValueDoc::get_int(const std::string& key) const {
  auto v = parse_int(get(key));
  if (!v) throw Error(ErrorCode::MalformedDocument, "key '" + key + "' is not an integer");
  return *v;
}

std::vector<double> KeyValueDoc::get_numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& tok : split_whitespace(get(key))) {
    auto v = parse_double(tok);
    if (!v) {
      throw Error(ErrorCode::MalformedDocument,
                  "key '" + key + "' holds non-numeric token '" + tok + "'");
    }
    out.push_back(*v);
  }
  return out;
}

std::string KeyValueDoc::str() const {
  std::string out;
  for (const auto& key : order_) {
    out += key;
    out += " = ";
    out += values_.at(key);
    out += '\n';
  }
  return out;
}

void KeyValueDoc::save(const std::filesystem::path& path) const { write_file(path, str()); }

}  // namespace fedids::textio
