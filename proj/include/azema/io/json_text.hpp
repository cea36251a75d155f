// JSON text output with doubles written to 17 significant digits, so every
// value read back is bit-identical to the one written.
#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include <json.hpp>

namespace azema::io {

using json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // keep it a JSON number that reads back as floating point
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

namespace detail {

inline void write_json(std::ostringstream& os, const json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{" << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << "," << nl;
        first = false;
        os << pad << json(it.key()).dump() << (indent > 0 ? ": " : ":");
        write_json(os, it.value(), indent, depth + 1);
      }
      os << nl << close_pad << "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[" << nl;
      bool first = true;
      for (const auto& v : j) {
        if (!first) os << "," << nl;
        first = false;
        os << pad;
        write_json(os, v, indent, depth + 1);
      }
      os << nl << close_pad << "]";
      return;
    }
    case json::value_t::number_float: os << format_double(j.get<double>()); return;
    default: os << j.dump(); return;
  }
}

}  // namespace detail

/// Serializes `j`; floats use 17 significant digits, non-finite floats become null.
inline std::string to_text(const json& j, int indent = 2) {
  std::ostringstream os;
  detail::write_json(os, j, indent, 0);
  if (indent > 0) os << "\n";
  return os.str();
}

}  // namespace azema::io
