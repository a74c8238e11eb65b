// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "owdc/errors.hpp"
#include "owdc/scenario.hpp"

// Scenario file format (schema_version 1).
//
// Top-level keys: schema_version, room, surfaces, racks, adts, receivers,
// noise, sim. Every field name carries its unit. Unknown keys are rejected.

namespace owdc {

inline constexpr int kScenarioSchemaVersion = 1;

class ScenarioParseError : public ValidationError {
 public:
  explicit ScenarioParseError(const std::string& what) : ValidationError(what) {}
};

namespace detail {

using nlohmann::json;

inline json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

inline void expect_keys(const json& j, std::string_view where,
                        std::initializer_list<std::string_view> allowed,
                        std::initializer_list<std::string_view> required) {
  if (!j.is_object()) throw ScenarioParseError(std::string(where) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ScenarioParseError(std::string(where) + ": unknown key '" + key + "'");
  }
  for (auto r : required) {
    if (!j.contains(std::string(r))) {
      throw ScenarioParseError(std::string(where) + ": missing key '" + std::string(r) + "'");
    }
  }
}

inline double get_number(const json& j, std::string_view key, std::string_view where) {
  const auto& v = j.at(std::string(key));
  if (!v.is_number()) {
    throw ScenarioParseError(std::string(where) + "." + std::string(key) + ": expected a number");
  }
  return v.get<double>();
}

inline std::string get_string(const json& j, std::string_view key, std::string_view where) {
  const auto& v = j.at(std::string(key));
  if (!v.is_string()) {
    throw ScenarioParseError(std::string(where) + "." + std::string(key) + ": expected a string");
  }
  return v.get<std::string>();
}

inline Vec3 get_vec(const json& j, std::string_view key, std::string_view where) {
  const auto& v = j.at(std::string(key));
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
      !v[2].is_number()) {
    throw ScenarioParseError(std::string(where) + "." + std::string(key) +
                             ": expected an array of 3 numbers");
  }
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

inline const json& get_array(const json& j, std::string_view key, std::string_view where) {
  const auto& v = j.at(std::string(key));
  if (!v.is_array()) {
    throw ScenarioParseError(std::string(where) + "." + std::string(key) + ": expected an array");
  }
  return v;
}

inline std::string indexed(std::string_view base, std::size_t i) {
  return std::string(base) + "[" + std::to_string(i) + "]";
}

}  // namespace detail

inline nlohmann::json scenario_to_json(const Scenario& s) {
  using detail::json;
  using detail::vec_to_json;
  json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["room"] = {{"length_m", s.room.length_m},
               {"width_m", s.room.width_m},
               {"height_m", s.room.height_m}};
  j["surfaces"] = json::array();
  for (const auto& sf : s.surfaces) {
    j["surfaces"].push_back({{"name", sf.name},
                             {"origin_m", vec_to_json(sf.origin)},
                             {"edge_u_m", vec_to_json(sf.edge_u)},
                             {"edge_v_m", vec_to_json(sf.edge_v)},
                             {"reflectivity", sf.reflectivity}});
  }
  j["racks"] = json::array();
  for (const auto& r : s.racks) {
    j["racks"].push_back(
        {{"name", r.name}, {"base_m", vec_to_json(r.base_m)}, {"dims_m", vec_to_json(r.dims_m)}});
  }
  j["adts"] = json::array();
  for (const auto& adt : s.adts) {
    json branches = json::array();
    for (const auto& br : adt.branches) {
      branches.push_back({{"position_m", vec_to_json(br.position)},
                          {"azimuth_deg", br.aim.azimuth_deg},
                          {"elevation_deg", br.aim.elevation_deg},
                          {"power_w", br.power_w},
                          {"half_power_semi_angle_deg", br.half_power_semi_angle_deg}});
    }
    j["adts"].push_back({{"name", adt.name}, {"branches", branches}});
  }
  j["receivers"] = json::array();
  for (const auto& rx : s.receivers) {
    j["receivers"].push_back({{"name", rx.name},
                              {"position_m", vec_to_json(rx.position)},
                              {"normal", vec_to_json(rx.normal)},
                              {"fov_half_angle_deg", rx.fov_half_angle_deg},
                              {"area_m2", rx.area_m2},
                              {"responsivity_a_per_w", rx.responsivity_a_per_w}});
  }
  j["noise"] = {{"preamp_current_density_a_per_rthz", s.noise.preamp_current_density_a_per_rthz},
                {"receiver_bandwidth_hz", s.noise.receiver_bandwidth_hz},
                {"background_power_w", s.noise.background_power_w},
                {"noise_bandwidth_factor", s.noise.noise_bandwidth_factor}};
  j["sim"] = {{"bin_width_s", s.sim.bin_width_s},
              {"element_size_m", s.sim.element_size_m},
              {"max_reflections", s.sim.max_reflections},
              {"max_elements", s.sim.max_elements},
              {"max_element_pairs", s.sim.max_element_pairs},
              {"los_occlusion", s.sim.los_occlusion}};
  return j;
}

/// Strict parse: every key listed is required except where noted, and
/// unknown keys are rejected.
inline Scenario scenario_from_json(const nlohmann::json& j) {
  using namespace detail;
  expect_keys(j, "scenario",
              {"schema_version", "room", "surfaces", "racks", "adts", "receivers", "noise", "sim"},
              {"schema_version", "room", "surfaces", "racks", "adts", "receivers", "noise", "sim"});
  const auto& version = j.at("schema_version");
  if (!version.is_number_integer() || version.get<int>() != kScenarioSchemaVersion) {
    throw ScenarioParseError("scenario.schema_version: unsupported value (expected 1)");
  }

  Scenario s;
  const auto& room = j.at("room");
  expect_keys(room, "room", {"length_m", "width_m", "height_m"},
              {"length_m", "width_m", "height_m"});
  s.room = {get_number(room, "length_m", "room"), get_number(room, "width_m", "room"),
            get_number(room, "height_m", "room")};

  const auto& surfaces = get_array(j, "surfaces", "scenario");
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    const auto where = indexed("surfaces", i);
    const auto& e = surfaces[i];
    expect_keys(e, where, {"name", "origin_m", "edge_u_m", "edge_v_m", "reflectivity"},
                {"name", "origin_m", "edge_u_m", "edge_v_m", "reflectivity"});
    s.surfaces.push_back({get_string(e, "name", where), get_vec(e, "origin_m", where),
                          get_vec(e, "edge_u_m", where), get_vec(e, "edge_v_m", where),
                          get_number(e, "reflectivity", where)});
  }

  const auto& racks = get_array(j, "racks", "scenario");
  for (std::size_t i = 0; i < racks.size(); ++i) {
    const auto where = indexed("racks", i);
    const auto& e = racks[i];
    expect_keys(e, where, {"name", "base_m", "dims_m"}, {"name", "base_m", "dims_m"});
    s.racks.push_back(
        {get_string(e, "name", where), get_vec(e, "base_m", where), get_vec(e, "dims_m", where)});
  }

  const auto& adts = get_array(j, "adts", "scenario");
  for (std::size_t i = 0; i < adts.size(); ++i) {
    const auto where = indexed("adts", i);
    const auto& e = adts[i];
    expect_keys(e, where, {"name", "branches"}, {"name", "branches"});
    AngleDiversityTransmitter adt;
    adt.name = get_string(e, "name", where);
    const auto& branches = get_array(e, "branches", where);
    for (std::size_t b = 0; b < branches.size(); ++b) {
      const auto bw = indexed(where + ".branches", b);
      const auto& be = branches[b];
      expect_keys(be, bw,
                  {"position_m", "azimuth_deg", "elevation_deg", "power_w",
                   "half_power_semi_angle_deg"},
                  {"position_m", "azimuth_deg", "elevation_deg", "power_w",
                   "half_power_semi_angle_deg"});
      TransmitterBranch br;
      br.position = get_vec(be, "position_m", bw);
      br.aim = {get_number(be, "azimuth_deg", bw), get_number(be, "elevation_deg", bw)};
      br.power_w = get_number(be, "power_w", bw);
      br.half_power_semi_angle_deg = get_number(be, "half_power_semi_angle_deg", bw);
      adt.branches.push_back(br);
    }
    s.adts.push_back(std::move(adt));
  }

  const auto& receivers = get_array(j, "receivers", "scenario");
  for (std::size_t i = 0; i < receivers.size(); ++i) {
    const auto where = indexed("receivers", i);
    const auto& e = receivers[i];
    expect_keys(e, where,
                {"name", "position_m", "normal", "fov_half_angle_deg", "area_m2",
                 "responsivity_a_per_w"},
                {"name", "position_m", "normal", "fov_half_angle_deg", "area_m2",
                 "responsivity_a_per_w"});
    WfovReceiver rx;
    rx.name = get_string(e, "name", where);
    rx.position = get_vec(e, "position_m", where);
    rx.normal = get_vec(e, "normal", where);
    rx.fov_half_angle_deg = get_number(e, "fov_half_angle_deg", where);
    rx.area_m2 = get_number(e, "area_m2", where);
    rx.responsivity_a_per_w = get_number(e, "responsivity_a_per_w", where);
    s.receivers.push_back(std::move(rx));
  }

  const auto& noise = j.at("noise");
  expect_keys(noise, "noise",
              {"preamp_current_density_a_per_rthz", "receiver_bandwidth_hz", "background_power_w",
               "noise_bandwidth_factor"},
              {"preamp_current_density_a_per_rthz", "receiver_bandwidth_hz", "background_power_w",
               "noise_bandwidth_factor"});
  s.noise.preamp_current_density_a_per_rthz =
      get_number(noise, "preamp_current_density_a_per_rthz", "noise");
  s.noise.receiver_bandwidth_hz = get_number(noise, "receiver_bandwidth_hz", "noise");
  s.noise.background_power_w = get_number(noise, "background_power_w", "noise");
  s.noise.noise_bandwidth_factor = get_number(noise, "noise_bandwidth_factor", "noise");

  // The two caps and the occlusion flag are optional and default as in ChannelParams.
  const auto& sim = j.at("sim");
  expect_keys(sim, "sim",
              {"bin_width_s", "element_size_m", "max_reflections", "max_elements",
               "max_element_pairs", "los_occlusion"},
              {"bin_width_s", "element_size_m", "max_reflections"});
  s.sim.bin_width_s = get_number(sim, "bin_width_s", "sim");
  s.sim.element_size_m = get_number(sim, "element_size_m", "sim");
  const auto& refl = sim.at("max_reflections");
  if (!refl.is_number_integer()) throw ScenarioParseError("sim.max_reflections: expected an integer");
  s.sim.max_reflections = refl.get<int>();
  if (sim.contains("max_elements")) {
    const auto& v = sim.at("max_elements");
    if (!v.is_number_unsigned()) {
      throw ScenarioParseError("sim.max_elements: expected a non-negative integer");
    }
    s.sim.max_elements = v.get<std::size_t>();
  }
  if (sim.contains("max_element_pairs")) {
    s.sim.max_element_pairs = get_number(sim, "max_element_pairs", "sim");
  }
  if (sim.contains("los_occlusion")) {
    const auto& v = sim.at("los_occlusion");
    if (!v.is_boolean()) throw ScenarioParseError("sim.los_occlusion: expected a boolean");
    s.sim.los_occlusion = v.get<bool>();
  }
  return s;
}

inline Scenario parse_scenario(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioParseError(std::string("malformed JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

inline std::string serialize_scenario(const Scenario& s) {
  return scenario_to_json(s).dump(2) + "\n";
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioParseError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace owdc
