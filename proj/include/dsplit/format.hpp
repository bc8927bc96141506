#pragma once

// Canonical numeric formatting and small CSV helpers.
//
// All user-facing numeric output (reports, CSV) goes through fmt_g9 so that
// regenerating a report from persisted state is byte-identical.  Network
// serialization uses fmt_g17, which round-trips IEEE doubles exactly.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsplit {

inline std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw std::runtime_error("parse_double: not a number: '" + s + "'");
  return v;
}

// Line-preserving CSV model: comments and field boundaries survive a
// parse -> emit round trip byte-for-byte.
struct CsvDoc {
  std::vector<std::vector<std::string>> rows;  // comment lines kept as single-field rows
  std::vector<bool> is_comment;

  static CsvDoc parse(const std::string& text) {
    CsvDoc doc;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] == '#') {
        doc.rows.push_back({line});
        doc.is_comment.push_back(true);
        continue;
      }
      std::vector<std::string> fields;
      std::string field;
      std::istringstream ls(line);
      while (std::getline(ls, field, ',')) fields.push_back(field);
      if (!line.empty() && line.back() == ',') fields.push_back("");
      doc.rows.push_back(std::move(fields));
      doc.is_comment.push_back(false);
    }
    return doc;
  }

  std::string emit() const {
    std::string out;
    for (size_t r = 0; r < rows.size(); ++r) {
      if (is_comment[r]) {
        out += rows[r][0];
      } else {
        for (size_t c = 0; c < rows[r].size(); ++c) {
          if (c) out += ',';
          out += rows[r][c];
        }
      }
      out += '\n';
    }
    return out;
  }
};

// FNV-1a over the canonical config text; hex-encoded for use as a cache key.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for read: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dsplit
