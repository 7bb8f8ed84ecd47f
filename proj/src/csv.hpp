#pragma once

#include "dvr/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace dvr::detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Accepts `nan`/`NaN` and `inf` spellings so the invalid-sample filter can see them.
inline double parse_double(std::string_view s, std::size_t line_no) {
  if (s == "nan" || s == "NaN" || s == "NAN") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf" || s == "+inf" || s == "Inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf" || s == "-Inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InputError("line " + std::to_string(line_no) + ": invalid number '" + std::string(s) + "'");
  }
  return v;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Splits text into lines, skipping blank ones; each entry is (1-based line number, content).
inline std::vector<std::pair<std::size_t, std::string_view>> lines_of(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t start = 0;
  std::size_t no = 0;
  while (start <= text.size()) {
    const auto pos = text.find('\n', start);
    ++no;
    auto line = trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (!line.empty()) out.emplace_back(no, line);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline void expect_header(std::string_view line, const std::vector<std::string_view>& columns,
                          std::string_view what) {
  const auto fields = split_fields(line);
  if (fields != columns) {
    std::string expected;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      expected += (i ? "," : "") + std::string(columns[i]);
    }
    throw InputError(std::string(what) + ": expected header '" + expected + "'");
  }
}

} // namespace dvr::detail
