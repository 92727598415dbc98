#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vbpg/core/error.hpp"

namespace vbpg::io {

using CsvRow = std::vector<std::string>;

/// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF.
class CsvReader {
 public:
  CsvReader(std::string text, char delimiter = ',') : text_(std::move(text)), delim_(delimiter) {
    // Skip a UTF-8 byte-order mark.
    if (text_.size() >= 3 && text_.compare(0, 3, "\xEF\xBB\xBF") == 0) pos_ = 3;
  }

  static CsvReader from_file(const std::string& path, char delimiter = ',') {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::MissingInput, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return CsvReader(ss.str(), delimiter);
  }

  /// Reads the next record; returns false at end of input. Blank lines are
  /// skipped. `line` receives the 1-based physical line the record began on.
  bool next(CsvRow& row, std::size_t& line) {
    row.clear();
    while (pos_ < text_.size() && (text_[pos_] == '\n' || text_[pos_] == '\r')) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
    if (pos_ >= text_.size()) return false;
    line = line_;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (quoted) {
        if (c == '"') {
          if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '"') {
            field.push_back('"');
            pos_ += 2;
            continue;
          }
          quoted = false;
          ++pos_;
          continue;
        }
        if (c == '\n') ++line_;
        field.push_back(c);
        ++pos_;
        continue;
      }
      if (c == '"' && !field_started) {
        quoted = true;
        field_started = true;
        ++pos_;
        continue;
      }
      if (c == delim_) {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
        ++pos_;
        continue;
      }
      if (c == '\r' || c == '\n') {
        if (c == '\r' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '\n') ++pos_;
        ++pos_;
        ++line_;
        break;
      }
      field.push_back(c);
      field_started = true;
      ++pos_;
    }
    row.push_back(std::move(field));
    return true;
  }

 private:
  std::string text_;
  char delim_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

inline std::string csv_escape(std::string_view field, char delimiter = ',') {
  bool needs = false;
  for (char c : field)
    if (c == delimiter || c == '"' || c == '\n' || c == '\r') needs = true;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out, char delimiter = ',') : out_(out), delim_(delimiter) {}

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << delim_;
      out_ << csv_escape(fields[i], delim_);
    }
    out_ << '\n';
  }

 private:
  std::ostream& out_;
  char delim_;
};

/// printf-style fixed formatting ("%.*f") with negative zero folded to zero.
inline std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s[0] == '-') {
    bool all_zero = true;
    for (char c : s.substr(1))
      if (c != '0' && c != '.') all_zero = false;
    if (all_zero) s.erase(0, 1);
  }
  return s;
}

/// Signed variant used in report tables ("+0.23").
inline std::string signed_fixed(double v, int decimals) {
  std::string s = fixed(v, decimals);
  if (s[0] != '-') s.insert(s.begin(), '+');
  return s;
}

/// Shortest representation that round-trips a double.
inline std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace vbpg::io
