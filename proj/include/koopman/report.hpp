#ifndef KOOPMAN_REPORT_HPP
#define KOOPMAN_REPORT_HPP

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "koopman/base.hpp"

namespace koopman {

// Insertion-ordered JSON tree for reports. Writing goes through a fixed
// %.17g format so that identical inputs produce byte-identical files on any
// IEEE-754 platform; reports double as regression fixtures.
class Report {
 public:
  Report() : value_(nullptr) {}
  Report(std::nullptr_t) : value_(nullptr) {}
  Report(bool b) : value_(b) {}
  Report(int v) : value_(static_cast<std::int64_t>(v)) {}
  Report(std::size_t v) : value_(static_cast<std::int64_t>(v)) {}
  Report(std::int64_t v) : value_(v) {}
  Report(double v) : value_(v) {}
  Report(const char* s) : value_(std::string(s)) {}
  Report(std::string s) : value_(std::move(s)) {}

  static Report array() {
    Report r;
    r.value_ = Array{};
    return r;
  }
  static Report object() {
    Report r;
    r.value_ = Object{};
    return r;
  }

  Report& push_back(Report v) {
    std::get<Array>(value_).items.push_back(std::move(v));
    return *this;
  }

  Report& set(const std::string& key, Report v) {
    std::get<Object>(value_).items.emplace_back(key, std::move(v));
    return *this;
  }

  bool is_array() const { return std::holds_alternative<Array>(value_); }

  std::string dump(int indent = 0) const {
    std::string out;
    write(out, indent, 0);
    if (indent > 0) out.push_back('\n');
    return out;
  }

 private:
  struct Array {
    std::vector<Report> items;
  };
  struct Object {
    std::vector<std::pair<std::string, Report>> items;
  };

  static void write_escaped(std::string& out, const std::string& s) {
    out.push_back('"');
    for (char c : s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\u%04x", c);
            out += buf;
          } else {
            out.push_back(c);
          }
      }
    }
    out.push_back('"');
  }

  static void write_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
    // bare integers would otherwise round-trip as a different JSON type
    if (std::string_view(buf).find_first_of(".eEni") == std::string_view::npos) out += ".0";
  }

  void write(std::string& out, int indent, int depth) const {
    auto newline = [&](int d) {
      if (indent > 0) {
        out.push_back('\n');
        out.append(static_cast<std::size_t>(indent) * d, ' ');
      }
    };
    if (std::holds_alternative<std::nullptr_t>(value_)) {
      out += "null";
    } else if (auto* b = std::get_if<bool>(&value_)) {
      out += *b ? "true" : "false";
    } else if (auto* i = std::get_if<std::int64_t>(&value_)) {
      out += std::to_string(*i);
    } else if (auto* d = std::get_if<double>(&value_)) {
      write_double(out, *d);
    } else if (auto* s = std::get_if<std::string>(&value_)) {
      write_escaped(out, *s);
    } else if (auto* a = std::get_if<Array>(&value_)) {
      if (a->items.empty()) {
        out += "[]";
        return;
      }
      out.push_back('[');
      for (std::size_t i = 0; i < a->items.size(); ++i) {
        if (i) out.push_back(',');
        newline(depth + 1);
        a->items[i].write(out, indent, depth + 1);
      }
      newline(depth);
      out.push_back(']');
    } else if (auto* o = std::get_if<Object>(&value_)) {
      if (o->items.empty()) {
        out += "{}";
        return;
      }
      out.push_back('{');
      for (std::size_t i = 0; i < o->items.size(); ++i) {
        if (i) out.push_back(',');
        newline(depth + 1);
        write_escaped(out, o->items[i].first);
        out.push_back(':');
        if (indent > 0) out.push_back(' ');
        o->items[i].second.write(out, indent, depth + 1);
      }
      newline(depth);
      out.push_back('}');
    }
  }

  std::variant<std::nullptr_t, bool, std::int64_t, double, std::string, Array, Object> value_;
};

inline Report complex_report(const cx& v) {
  Report r = Report::array();
  r.push_back(v.real());
  r.push_back(v.imag());
  return r;
}

template <class Range>
Report vector_report(const Range& values) {
  Report r = Report::array();
  for (const auto& v : values) r.push_back(v);
  return r;
}

template <class Range>
Report complex_vector_report(const Range& values) {
  Report r = Report::array();
  for (const auto& v : values) r.push_back(complex_report(v));
  return r;
}

template <class Range>
Report int_vector_report(const Range& values) {
  Report r = Report::array();
  for (const auto& v : values) r.push_back(static_cast<std::int64_t>(v));
  return r;
}

}  // namespace koopman

#endif
