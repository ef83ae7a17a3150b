#include "roughsim/text_io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>

#include "roughsim/error.hpp"

namespace roughsim {

std::string fmt17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string fmt_short(double value) {
  char buf[40];
  for (int precision = 15; precision < 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) return buf;
  }
  return fmt17(value);
}

std::string fmt6(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

std::vector<std::string> split(std::string_view text, char delimiter) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(delimiter, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(text.substr(start));
      return parts;
    }
    parts.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

double parse_double(std::string_view token, std::string_view what) {
  const std::string s = trim(token);
  if (s.empty()) {
    throw Error(ErrorKind::Validation,
                "empty value for " + std::string(what));
  }
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) {
    throw Error(ErrorKind::Validation, "cannot parse '" + s + "' as a number for " +
                                           std::string(what));
  }
  return v;
}

std::int64_t parse_int(std::string_view token, std::string_view what) {
  const std::string s = trim(token);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorKind::Validation, "cannot parse '" + s +
                                           "' as an integer for " +
                                           std::string(what));
  }
  return v;
}

std::uint64_t parse_uint(std::string_view token, std::string_view what) {
  const std::string s = trim(token);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorKind::Validation, "cannot parse '" + s +
                                           "' as an unsigned integer for " +
                                           std::string(what));
  }
  return v;
}

std::vector<double> parse_double_list(std::string_view text,
                                      std::string_view what) {
  std::vector<double> values;
  for (const auto& part : split(text, ',')) {
    values.push_back(parse_double(part, what));
  }
  return values;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "' for reading");
  return in;
}

std::map<std::string, std::string> read_key_values(const std::string& path) {
  auto in = open_input(path);
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Validation, path + ":" + std::to_string(line_no) +
                                             ": expected key=value");
    }
    const std::string key = trim(t.substr(0, eq));
    if (kv.count(key) != 0) {
      throw Error(ErrorKind::Validation, path + ":" + std::to_string(line_no) +
                                             ": duplicate key '" + key + "'");
    }
    kv[key] = trim(t.substr(eq + 1));
  }
  return kv;
}

void write_key_values(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& kv) {
  auto out = open_output(path);
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing '" + path + "'");
}

}  // namespace roughsim
