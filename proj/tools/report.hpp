#pragma once

// CSV emission (RFC 4180, '.' decimal separator, 17 significant digits) and
// stderr logging gated by SHORTKERN_LOG.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <locale>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "shortkern/error.hpp"

namespace shortkern::app {

inline std::string format_double(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << x;
  return os.str();
}

inline std::string csv_field(std::string_view raw) {
  if (raw.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(raw);
  std::string out = "\"";
  for (char ch : raw) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error(ErrorCode::ConfigError, "cannot write " + path);
  }

  void header(const std::vector<std::string>& names) { row(names); }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out_ << ',';
      out_ << csv_field(fields[i]);
    }
    out_ << "\r\n";
  }

 private:
  std::ofstream out_;
};

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("SHORTKERN_LOG");
    const std::string_view v = env == nullptr ? "error" : env;
    if (v == "debug") return LogLevel::Debug;
    if (v == "info") return LogLevel::Info;
    return LogLevel::Error;
  }();
  return level;
}

inline void log(LogLevel level, std::string_view message) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static constexpr const char* kNames[] = {"error", "info", "debug"};
  std::cerr << "[shortkern " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace shortkern::app
