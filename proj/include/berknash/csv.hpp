#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "berknash/errors.hpp"
#include "berknash/version.hpp"

namespace berknash {

// Shortest round-trip decimal form; locale-independent.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // prefer a shorter representation when it round-trips
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(shorter, "%lf", &back);
    if (back == v) return shorter;
  }
  return buf;
}

// Deterministic text artifact with the standard provenance header.
class ArtifactWriter {
 public:
  ArtifactWriter(const std::string& path, const std::string& argv_line, uint64_t seed)
      : out_(path) {
    if (!out_) throw ConfigError("cannot open output file '" + path + "'");
    out_ << "# berknash " << kVersion << "; argv: " << argv_line << "; seed: " << seed << "\n";
  }

  void comment(const std::string& text) { out_ << "# " << text << "\n"; }

  void columns(const std::vector<std::string>& names) {
    for (size_t i = 0; i < names.size(); ++i) out_ << (i ? "," : "") << names[i];
    out_ << "\n";
  }

  void row(const std::vector<double>& vals) {
    for (size_t i = 0; i < vals.size(); ++i) out_ << (i ? "," : "") << fmt_double(vals[i]);
    out_ << "\n";
  }

  void kv(const std::string& key, const std::string& value) { out_ << key << " = " << value << "\n"; }
  void kv(const std::string& key, double value) { kv(key, fmt_double(value)); }
  void kv(const std::string& key, uint64_t value) { kv(key, std::to_string(value)); }

  void raw(const std::string& line) { out_ << line << "\n"; }

 private:
  std::ofstream out_;
};

}  // namespace berknash
