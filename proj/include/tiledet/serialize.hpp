#pragma once

// Canonical document emission. The on-disk formats pin key order and float
// formatting, so documents are rendered by hand instead of through a JSON
// library's dump(): saving the same data twice must yield identical bytes.

#include <cstdio>
#include <string>

namespace tiledet {

/// Fixed 6-fractional-digit decimal, the serialized form of every score/ratio.
inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (const char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out;
}

inline std::string json_str(const std::string& s) { return '"' + json_escape(s) + '"'; }

}  // namespace tiledet
