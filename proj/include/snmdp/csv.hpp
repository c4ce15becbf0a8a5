#pragma once

#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "snmdp/mdp.hpp"

namespace snmdp {

/// Minimal CSV emitter: fixed header, comma separator, '\n' line ends,
/// locale-independent numbers. Fields are never quoted, so callers must not
/// pass text containing commas or newlines.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header) : out_(out), width_(header.size()) {
    write(header);
  }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != width_) throw std::logic_error("CsvWriter: row width does not match header");
    write(fields);
  }

  static std::string number(double x) { return detail::format_double(x); }
  static std::string number(std::optional<double> x) { return x ? number(*x) : std::string(); }
  static std::string integer(std::size_t x) { return std::to_string(x); }
  static std::string boolean(bool b) { return b ? "true" : "false"; }

 private:
  void write(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i].find_first_of(",\n\r\"") != std::string::npos)
        throw std::invalid_argument("CsvWriter: field needs quoting: " + fields[i]);
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  std::ostream& out_;
  std::size_t width_;
};

}  // namespace snmdp
