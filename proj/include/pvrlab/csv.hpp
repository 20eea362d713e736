#pragma once

// Minimal CSV emission and parsing for the experiment artifacts. Numbers are
// printed with std::to_chars shortest round-trip form, so files are
// byte-stable across runs and every written value reads back exactly.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace pvrlab {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_int(long long v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_uint(std::uint64_t v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad number: '" + std::string(s) + "'");
  return v;
}

inline long long parse_int(std::string_view s) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad integer: '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_uint(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("bad unsigned integer: '" + std::string(s) + "'");
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  friend bool operator==(const CsvTable&, const CsvTable&) = default;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::invalid_argument("no column named '" + std::string(name) + "'");
  }
};

namespace detail {

inline void check_field(const std::string& f) {
  if (f.find_first_of(",\n\r") != std::string::npos)
    throw std::invalid_argument("csv field may not contain commas or newlines");
}

}  // namespace detail

inline std::string to_csv(const CsvTable& t) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      detail::check_field(fields[i]);
      if (i) out += ',';
      out += fields[i];
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) {
    if (r.size() != t.header.size())
      throw std::invalid_argument("csv row width does not match the header");
    line(r);
  }
  return out;
}

inline CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::size_t at = 0;
  bool first = true;
  while (at < text.size()) {
    std::size_t end = text.find('\n', at);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(at, end - at);
    at = end + 1;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t f = 0;
    while (true) {
      const std::size_t c = line.find(',', f);
      fields.emplace_back(line.substr(f, c - f));
      if (c == std::string_view::npos) break;
      f = c + 1;
    }
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != t.header.size())
        throw std::invalid_argument("csv row width does not match the header");
      t.rows.push_back(std::move(fields));
    }
  }
  if (first) throw std::invalid_argument("csv text has no header");
  return t;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

inline void write_csv(const std::string& path, const CsvTable& t) {
  write_text_file(path, to_csv(t));
}

inline CsvTable read_csv(const std::string& path) { return parse_csv(read_text_file(path)); }

}  // namespace pvrlab
