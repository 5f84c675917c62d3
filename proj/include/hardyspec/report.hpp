#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "hardyspec/common.hpp"

namespace hardyspec {

/// Outcome of one inequality/bound evaluation. `bound_value` and
/// `reference_value` carry the two sides being compared (ratio = bound/ref);
/// `lhs`/`rhs` mirror the inequality as written when that reads better in
/// reports. Unused numeric fields stay NaN and serialize as null.
struct BoundReport {
  std::string name;
  double bound_value = kNaN;
  double reference_value = kNaN;
  double ratio = kNaN;
  double lhs = kNaN;
  double rhs = kNaN;
  double std_err = kNaN;  // serialized as "stderr"
  int64_t samples = 0;
  uint64_t seed = 0;
  std::map<std::string, double> params;
  std::map<std::string, double> tolerances;
  bool pass = true;
  std::string notes;

  void set_ratio() {
    ratio = (reference_value != 0.0 && !std::isnan(reference_value) &&
             !std::isnan(bound_value))
                ? bound_value / reference_value
                : kNaN;
  }
};

namespace detail {
/// Doubles are rounded to 12 significant digits before storage so emitted
/// JSON is byte-stable across platforms; non-finite values become null.
inline nlohmann::json jnum(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_sig(v, 12);
}
}  // namespace detail

inline void to_json(nlohmann::json& j, const BoundReport& r) {
  j = nlohmann::json{
      {"name", r.name},
      {"bound_value", detail::jnum(r.bound_value)},
      {"reference_value", detail::jnum(r.reference_value)},
      {"ratio", detail::jnum(r.ratio)},
      {"lhs", detail::jnum(r.lhs)},
      {"rhs", detail::jnum(r.rhs)},
      {"stderr", detail::jnum(r.std_err)},
      {"samples", r.samples},
      {"seed", r.seed},
      {"pass", r.pass},
      {"notes", r.notes},
  };
  nlohmann::json p = nlohmann::json::object();
  for (const auto& [k, v] : r.params) p[k] = detail::jnum(v);
  nlohmann::json t = nlohmann::json::object();
  for (const auto& [k, v] : r.tolerances) t[k] = detail::jnum(v);
  j["params"] = p;
  j["tolerances"] = t;
}

}  // namespace hardyspec
