#pragma once

// JSON run configuration for a single scenario. Keys mirror the field names
// of ArrayScenario and AdmmConfig; unknown keys are rejected.
//
//   {
//     "scenario": {
//       "geometry": {"num_elements": 10, "element_spacing_over_wavelength": 0.5},
//       "true_doas_deg": [-4.6, 23.2], "num_snapshots": 30,
//       "snr_db": 20, "sor_db": -20, "outlier_prob": 0.1,
//       "coherent": false, "rng_seed": 7
//     },
//     "admm": {"lambda1": 7, "lambda2": 1.4, "rho": 3, "beta": 0.03,
//              "tol": 1e-4, "max_iters": 5000, "anchor": "previous_iterate",
//              "mlc": {"lam": 1, "gamma": 2, "eta": 0.5}},
//     "grid_spacing_deg": 2,
//     "refine": {"enabled": true, "tol": 1e-4, "max_iters": 50, "clamp_step": true}
//   }
//
// "admm" is optional and defaults to the SNR preset. snr_db and sor_db accept
// the string "inf" to disable the corresponding noise term.

#include "robust_doa/admm.hpp"
#include "robust_doa/array_model.hpp"
#include "robust_doa/bench.hpp"

#include <nlohmann/json.hpp>

#include <initializer_list>
#include <istream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace robust_doa {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ArrayScenario scenario;
  std::optional<AdmmConfig> admm;
  double grid_spacing_deg = 2.0;
  PipelineOptions pipeline;

  AdmmConfig effective_admm() const {
    return admm ? *admm : AdmmConfig::preset_for_snr(scenario.snr_db);
  }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, std::string_view where,
                           std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (auto k : allowed) known = known || item.key() == k;
    if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + std::string(where));
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline void read_db(const json& obj, const char* key, double& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (v.is_string()) {
    if (v.get<std::string>() != "inf") throw ConfigError(std::string(key) + " must be a number or \"inf\"");
    out = std::numeric_limits<double>::infinity();
    return;
  }
  read(obj, key, out);
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& root) {
  using detail::read;
  detail::reject_unknown(root, "config", {"scenario", "admm", "grid_spacing_deg", "refine"});
  if (!root.contains("scenario")) throw ConfigError("config needs a 'scenario' section");

  RunConfig cfg;
  const auto& sc = root.at("scenario");
  detail::reject_unknown(sc, "scenario",
                         {"geometry", "true_doas_deg", "num_snapshots", "snr_db", "sor_db",
                          "outlier_prob", "coherent", "rng_seed"});
  if (sc.contains("geometry")) {
    const auto& g = sc.at("geometry");
    detail::reject_unknown(g, "geometry", {"num_elements", "element_spacing_over_wavelength"});
    read(g, "num_elements", cfg.scenario.geometry.num_elements);
    read(g, "element_spacing_over_wavelength", cfg.scenario.geometry.element_spacing_over_wavelength);
  }
  if (!sc.contains("true_doas_deg")) throw ConfigError("scenario needs 'true_doas_deg'");
  read(sc, "true_doas_deg", cfg.scenario.true_doas_deg);
  read(sc, "num_snapshots", cfg.scenario.num_snapshots);
  detail::read_db(sc, "snr_db", cfg.scenario.snr_db);
  detail::read_db(sc, "sor_db", cfg.scenario.sor_db);
  read(sc, "outlier_prob", cfg.scenario.outlier_prob);
  read(sc, "coherent", cfg.scenario.coherent);
  read(sc, "rng_seed", cfg.scenario.rng_seed);

  if (root.contains("admm")) {
    const auto& a = root.at("admm");
    detail::reject_unknown(a, "admm", {"lambda1", "lambda2", "rho", "beta", "tol", "max_iters",
                                       "mlc", "anchor"});
    AdmmConfig ac = AdmmConfig::preset_for_snr(cfg.scenario.snr_db);
    read(a, "lambda1", ac.lambda1);
    read(a, "lambda2", ac.lambda2);
    read(a, "rho", ac.rho);
    read(a, "beta", ac.beta);
    read(a, "tol", ac.tol);
    read(a, "max_iters", ac.max_iters);
    if (a.contains("mlc")) {
      const auto& m = a.at("mlc");
      detail::reject_unknown(m, "mlc", {"lam", "gamma", "eta"});
      read(m, "lam", ac.mlc.lam);
      read(m, "gamma", ac.mlc.gamma);
      read(m, "eta", ac.mlc.eta);
    }
    if (a.contains("anchor")) {
      std::string anchor;
      read(a, "anchor", anchor);
      if (anchor == "previous_iterate")
        ac.anchor = WeightAnchor::kPreviousIterate;
      else if (anchor == "fixed_point")
        ac.anchor = WeightAnchor::kFixedPoint;
      else
        throw ConfigError("anchor must be 'previous_iterate' or 'fixed_point'");
    }
    cfg.admm = ac;
  }

  read(root, "grid_spacing_deg", cfg.grid_spacing_deg);

  if (root.contains("refine")) {
    const auto& r = root.at("refine");
    detail::reject_unknown(r, "refine", {"enabled", "tol", "max_iters", "clamp_step"});
    read(r, "enabled", cfg.pipeline.refine);
    read(r, "tol", cfg.pipeline.refine_options.tol);
    read(r, "max_iters", cfg.pipeline.refine_options.max_iters);
    read(r, "clamp_step", cfg.pipeline.clamp_refine_step);
  }

  try {
    cfg.scenario.validate();
    if (cfg.admm) cfg.admm->validate();
    AngleGrid::uniform(cfg.grid_spacing_deg);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (!(cfg.pipeline.refine_options.tol > 0.0) || cfg.pipeline.refine_options.max_iters < 1)
    throw ConfigError("refine tol and max_iters must be positive");
  return cfg;
}

inline RunConfig parse_run_config(std::istream& in) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(root);
}

}  // namespace robust_doa
