#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "snmdp/mdp.hpp"

namespace snmdp {

// MDP file format (JSON, UTF-8)
//
//   {
//     "n": <int >= 1>, "m": <int >= 1>, "gamma": <number>,
//     "allowed": [[<action>, ...], ...],          optional, one list per state
//     "costs": [{"s": <int>, "a": <int>, "value": <number>}, ...],
//     "transitions": [{"s": <int>, "a": <int>,
//                      "rows": [{"sp": <int>, "p": <number>}, ...]}, ...]
//   }
//
// Indices are 0-based. Every admissible (s, a) needs exactly one cost entry
// and one transitions entry. Rows whose sum is within 1e-12 of one are
// rescaled to sum to one; anything further off is a validation error.
// Numbers are written in shortest round-trip form.

/// Malformed document: bad JSON, a missing field, or a field of the wrong type.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error("parse error: " + what) {}
};

namespace detail {

using json = nlohmann::json;

inline std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + " must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError("missing required field \"" + std::string(key) + "\"" +
                                        (where.empty() ? "" : " in " + where));
  return *it;
}

inline std::string field_path(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

inline std::size_t read_index(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number_unsigned())
    throw ParseError("field \"" + field_path(where, key) + "\" must be a non-negative integer");
  return v.get<std::size_t>();
}

inline double read_number(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) throw ParseError("field \"" + field_path(where, key) + "\" must be a number");
  return v.get<double>();
}

inline const json& read_array(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_array()) throw ParseError("field \"" + field_path(where, key) + "\" must be an array");
  return v;
}

inline void check_bound(std::size_t value, std::size_t bound, const std::string& field) {
  if (value >= bound)
    throw ParseError("field \"" + field + "\" = " + std::to_string(value) + " is out of range (< " +
                     std::to_string(bound) + ")");
}

// Rows off by no more than accumulated summation error are kept bit-for-bit,
// so that saving and reloading is exact.
inline void renormalize(std::vector<Transition>& row) {
  double sum = 0.0;
  for (const auto& t : row) sum += t.prob;
  const double dev = std::abs(sum - 1.0);
  const double roundoff = 4.0 * static_cast<double>(row.size() + 1) * std::numeric_limits<double>::epsilon();
  if (dev <= kStochasticTolerance && dev > roundoff)
    for (auto& t : row) t.prob /= sum;
}

}  // namespace detail

/// Parses and validates an MDP document. Throws ParseError or ValidationError.
inline Mdp load_mdp(std::string_view document) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ParseError(detail::line_col(document, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError("top-level value must be an object");

  const std::size_t n = detail::read_index(doc, "n", "");
  const std::size_t m = detail::read_index(doc, "m", "");
  const double gamma = detail::read_number(doc, "gamma", "");
  if (n == 0) throw ParseError("field \"n\" must be positive");
  if (m == 0) throw ParseError("field \"m\" must be positive");

  MdpBuilder b(n, m, gamma);

  if (auto it = doc.find("allowed"); it != doc.end()) {
    if (!it->is_array() || it->size() != n)
      throw ParseError("field \"allowed\" must be an array with one entry per state");
    for (std::size_t s = 0; s < n; ++s) {
      const std::string where = "allowed[" + std::to_string(s) + "]";
      const json& list = (*it)[s];
      if (!list.is_array()) throw ParseError("field \"" + where + "\" must be an array");
      std::vector<std::size_t> acts;
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string f = where + "[" + std::to_string(i) + "]";
        if (!list[i].is_number_unsigned()) throw ParseError("field \"" + f + "\" must be a non-negative integer");
        acts.push_back(list[i].get<std::size_t>());
        detail::check_bound(acts.back(), m, f);
      }
      b.set_allowed(s, std::move(acts));
    }
  }

  std::vector<char> cost_seen(n * m, 0);
  const json& costs = detail::read_array(doc, "costs", "");
  for (std::size_t i = 0; i < costs.size(); ++i) {
    const std::string where = "costs[" + std::to_string(i) + "]";
    const std::size_t s = detail::read_index(costs[i], "s", where);
    const std::size_t a = detail::read_index(costs[i], "a", where);
    detail::check_bound(s, n, where + ".s");
    detail::check_bound(a, m, where + ".a");
    if (cost_seen[s * m + a]++) throw ParseError(where + " repeats the pair " + detail::pair_label(s, a));
    b.set_cost(s, a, detail::read_number(costs[i], "value", where));
  }

  std::vector<char> row_seen(n * m, 0);
  const json& transitions = detail::read_array(doc, "transitions", "");
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const std::string where = "transitions[" + std::to_string(i) + "]";
    const std::size_t s = detail::read_index(transitions[i], "s", where);
    const std::size_t a = detail::read_index(transitions[i], "a", where);
    detail::check_bound(s, n, where + ".s");
    detail::check_bound(a, m, where + ".a");
    if (row_seen[s * m + a]++) throw ParseError(where + " repeats the pair " + detail::pair_label(s, a));
    const json& rows = detail::read_array(transitions[i], "rows", where);
    std::vector<Transition> row;
    row.reserve(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const std::string w = where + ".rows[" + std::to_string(j) + "]";
      const std::size_t sp = detail::read_index(rows[j], "sp", w);
      detail::check_bound(sp, n, w + ".sp");
      row.push_back({sp, detail::read_number(rows[j], "p", w)});
    }
    detail::renormalize(row);
    b.set_row(s, a, std::move(row));
  }

  return b.build_validated();
}

inline std::string save_mdp(const Mdp& mdp) {
  using ojson = nlohmann::ordered_json;
  ojson doc;
  doc["n"] = mdp.num_states();
  doc["m"] = mdp.num_actions();
  doc["gamma"] = mdp.gamma();

  bool restricted = false;
  for (std::size_t s = 0; s < mdp.num_states(); ++s)
    restricted = restricted || mdp.actions(s).size() != mdp.num_actions();
  if (restricted) {
    ojson allowed = ojson::array();
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
      auto acts = mdp.actions(s);
      allowed.push_back(ojson(std::vector<std::size_t>(acts.begin(), acts.end())));
    }
    doc["allowed"] = std::move(allowed);
  }

  ojson costs = ojson::array();
  ojson transitions = ojson::array();
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    for (std::size_t r = mdp.first_row(s); r < mdp.first_row(s + 1); ++r) {
      const std::size_t a = mdp.row_action(r);
      costs.push_back({{"s", s}, {"a", a}, {"value", mdp.row_cost(r)}});
      ojson rows = ojson::array();
      for (const auto& t : mdp.row(r)) rows.push_back({{"sp", t.next}, {"p", t.prob}});
      transitions.push_back({{"s", s}, {"a", a}, {"rows", std::move(rows)}});
    }
  }
  doc["costs"] = std::move(costs);
  doc["transitions"] = std::move(transitions);
  return doc.dump(1) + "\n";
}

inline Mdp load_mdp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_mdp(buf.str());
}

inline void save_mdp_file(const Mdp& mdp, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << save_mdp(mdp);
  if (!out) throw std::runtime_error("write failed: " + path);
}

/// 64-bit FNV-1a, used as the content digest of saved instances.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace snmdp
