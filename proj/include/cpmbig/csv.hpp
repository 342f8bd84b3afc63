// Copyright 2026 The cpmbig Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/tokenizer.hpp>

#include "cpmbig/dataset.hpp"
#include "cpmbig/errors.hpp"

namespace cpmbig {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based file line of each row
};

/// Throws boost::escaped_list_error on bad escapes or an unterminated quote.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::size_t quotes = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\') {
      ++i;
    } else if (line[i] == '"') {
      ++quotes;
    }
  }
  if (quotes % 2 != 0) throw boost::escaped_list_error("unterminated quote");
  using Sep = boost::escaped_list_separator<char>;
  boost::tokenizer<Sep> tok(line, Sep('\\', ',', '"'));
  std::vector<std::string> out(tok.begin(), tok.end());
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (t.header.empty()) {
      try {
        t.header = split_csv_line(line);
      } catch (const boost::escaped_list_error& e) {
        throw IngestError("malformed header in '" + path + "': " + e.what());
      }
      continue;
    }
    try {
      t.rows.push_back(split_csv_line(line));
    } catch (const boost::escaped_list_error&) {
      t.rows.emplace_back();  // malformed quoting: the row is rejected later
    }
    t.line_numbers.push_back(lineno);
  }
  if (t.header.empty()) throw IngestError("'" + path + "' has no header row");
  return t;
}

inline std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

namespace detail {

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const bool same = std::tolower(static_cast<unsigned char>(a[i - 1])) ==
                        std::tolower(static_cast<unsigned char>(b[j - 1]));
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (same ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace detail

/// Header names closest to `name` (case-insensitive edit distance <= 2, or
/// containing it), best first.
inline std::vector<std::string> close_matches(const std::string& name,
                                              const std::vector<std::string>& header) {
  std::vector<std::pair<std::size_t, std::string>> scored;
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  for (const auto& h : header) {
    const std::size_t d = detail::edit_distance(name, h);
    if (d <= 2 || lower(h).find(lower(name)) != std::string::npos) scored.emplace_back(d, h);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  for (auto& s : scored) out.push_back(std::move(s.second));
  return out;
}

inline std::size_t column_index(const CsvTable& t, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it != t.header.end()) return static_cast<std::size_t>(it - t.header.begin());
  std::string msg = "column '" + name + "' not found";
  const auto near = close_matches(name, t.header);
  if (!near.empty()) {
    msg += "; did you mean";
    for (std::size_t i = 0; i < near.size(); ++i) msg += (i ? ", '" : " '") + near[i] + "'";
    msg += "?";
  }
  throw IngestError(msg);
}

struct IngestReport {
  std::size_t rows_read = 0;
  std::vector<std::size_t> rejected_lines;  // 1-based file lines with missing or non-numeric cells
};

/// Reads the outcome and predictor columns. An empty predictor list selects
/// every other column. Rows with a missing or non-numeric selected cell are
/// skipped and reported.
inline Dataset ingest_csv(const std::string& path, const std::string& outcome,
                          std::vector<std::string> predictors = {}, IngestReport* report = nullptr) {
  const CsvTable t = read_csv(path);
  const std::size_t yc = column_index(t, outcome);
  if (predictors.empty()) {
    for (const auto& h : t.header) {
      if (h != outcome) predictors.push_back(h);
    }
  }
  std::vector<std::size_t> xc;
  for (const auto& p : predictors) xc.push_back(column_index(t, p));

  std::vector<double> y;
  std::vector<double> xs;
  IngestReport rep;
  rep.rows_read = t.rows.size();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    auto cell = [&](std::size_t c) -> std::optional<double> {
      return c < row.size() ? parse_number(row[c]) : std::nullopt;
    };
    std::vector<double> vals;
    bool ok = true;
    if (auto v = cell(yc)) {
      vals.push_back(*v);
    } else {
      ok = false;
    }
    for (std::size_t c : xc) {
      if (!ok) break;
      if (auto v = cell(c)) {
        vals.push_back(*v);
      } else {
        ok = false;
      }
    }
    if (!ok) {
      rep.rejected_lines.push_back(t.line_numbers[r]);
      continue;
    }
    y.push_back(vals[0]);
    xs.insert(xs.end(), vals.begin() + 1, vals.end());
  }
  if (y.empty()) throw IngestError("'" + path + "' has no usable rows");
  Dataset d;
  d.y = std::move(y);
  d.names = predictors;
  const auto n = static_cast<Eigen::Index>(d.y.size());
  const auto p = static_cast<Eigen::Index>(xc.size());
  d.X = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      xs.data(), n, p);
  if (report) *report = std::move(rep);
  return d;
}

/// Shortest text that reads back as the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace cpmbig
