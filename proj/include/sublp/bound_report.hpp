#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <json.hpp>

namespace sublp {

using json = nlohmann::json;

/// Empirical constant of one verified inequality: n_hat = sup(LHS/RHS) over a
/// lattice, together with its drift when the lattice is refined.
struct BoundReport {
  std::string inequality_id;
  json grid = json::object();
  double n_hat = 0.0;
  double n_hat_refined = 0.0;
  double refinement_drift = 0.0;
  double drift_tolerance = 0.05;
  bool pass = false;
  json details = json::object();

  /// Sets n_hat from the refined run, the relative drift against the coarse
  /// run, and pass := finite && drift <= drift_tolerance.
  void settle(double coarse, double refined) {
    n_hat = refined;
    n_hat_refined = refined;
    const double scale = std::max(std::abs(coarse), std::abs(refined));
    refinement_drift = scale > 0.0 ? std::abs(refined - coarse) / scale : 0.0;
    pass = std::isfinite(coarse) && std::isfinite(refined) &&
           refinement_drift <= drift_tolerance;
    details["n_hat_coarse"] = coarse;
  }
};

inline void to_json(json& j, const BoundReport& r) {
  j = json{{"inequality_id", r.inequality_id},
           {"grid", r.grid},
           {"n_hat", r.n_hat},
           {"refinement_drift", r.refinement_drift},
           {"drift_tolerance", r.drift_tolerance},
           {"pass", r.pass},
           {"details", r.details}};
}

}  // namespace sublp
