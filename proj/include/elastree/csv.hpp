// SPDX-License-Identifier: Apache-2.0
//
// Minimal RFC 4180 CSV emission: UTF-8, comma separated, fields quoted when
// they contain commas, quotes, or newlines. Numeric formatting is fixed so
// identical runs produce byte-identical files.

#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace elastree {

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

// Money renders with two decimals (cents), durations with three.
inline std::string fmt_money(double usd) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", usd);
  return buf;
}

inline std::string fmt_seconds(double s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", s);
  return buf;
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace elastree
