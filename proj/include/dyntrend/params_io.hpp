#pragma once

#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "dyntrend/activeness.hpp"
#include "dyntrend/error.hpp"
#include "dyntrend/proximity.hpp"

namespace dyntrend {

struct ModelFile {
  DAParams params;
  ProximityConfig proximity;
};

inline nlohmann::json to_json(const ProximityConfig& c) {
  nlohmann::json j{{"kind", to_string(c.kind)}, {"floor", c.floor}};
  if (c.kind == Kernel::shortest_path) {
    j["b"] = c.b;
  } else {
    j["p"] = c.p;
    j["rw_tolerance"] = c.rw_tolerance;
  }
  return j;
}

inline nlohmann::json to_json(const ModelFile& m) {
  return {{"alpha", m.params.alpha},
          {"tau", m.params.tau},
          {"epsilon", m.params.epsilon},
          {"t0", m.params.t0},
          {"proximity", to_json(m.proximity)}};
}

inline ModelFile model_from_json(const nlohmann::json& j) {
  try {
    ModelFile m;
    m.params.alpha = j.at("alpha").get<double>();
    m.params.tau = j.at("tau").get<double>();
    m.params.epsilon = j.value("epsilon", 1e-9);
    m.params.t0 = j.value("t0", 0.0);
    if (j.contains("proximity")) {
      const auto& p = j.at("proximity");
      m.proximity.kind = parse_kernel(p.value("kind", std::string("sp")));
      m.proximity.b = p.value("b", m.proximity.b);
      m.proximity.p = p.value("p", m.proximity.p);
      m.proximity.floor = p.value("floor", m.proximity.floor);
      m.proximity.rw_tolerance = p.value("rw_tolerance", m.proximity.rw_tolerance);
    }
    m.params.validate();
    m.proximity.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad parameter file: ") + e.what());
  }
}

inline void write_model(std::ostream& out, const ModelFile& m) {
  out << to_json(m).dump(2) << '\n';
}

inline ModelFile read_model(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("parameter file is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace dyntrend
