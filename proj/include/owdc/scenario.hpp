// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "owdc/geometry.hpp"
#include "owdc/impulse_response.hpp"
#include "owdc/linkbudget.hpp"
#include "owdc/optics.hpp"

namespace owdc {

struct Room {
  double length_m = 0.0;  // along x
  double width_m = 0.0;   // along y
  double height_m = 0.0;  // along z

  Box box() const { return {{0.0, 0.0, 0.0}, {length_m, width_m, height_m}}; }

  friend bool operator==(const Room&, const Room&) = default;
};

/// Rack body; `base_m` is the center of its bottom face.
struct Rack {
  std::string name;
  Vec3 base_m;
  Vec3 dims_m;

  Box box() const { return rack_box(base_m, dims_m); }

  friend bool operator==(const Rack&, const Rack&) = default;
};

struct Scenario {
  Room room;
  std::vector<Surface> surfaces;
  std::vector<Rack> racks;
  std::vector<AngleDiversityTransmitter> adts;
  std::vector<WfovReceiver> receivers;
  NoiseParams noise;
  ChannelParams sim;

  Environment environment() const {
    Environment env;
    env.surfaces = surfaces;
    for (const auto& r : racks) env.occluders.push_back(r.box());
    return env;
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

enum class AimMode { kExact, kPaperAngles };

/// The six inner faces of a shoebox room, each facing inward.
inline std::vector<Surface> shoebox_surfaces(const Room& room, double wall_rho, double ceiling_rho,
                                             double floor_rho) {
  const double L = room.length_m;
  const double W = room.width_m;
  const double H = room.height_m;
  return {
      {"floor", {0, 0, 0}, {L, 0, 0}, {0, W, 0}, floor_rho},
      {"ceiling", {0, 0, H}, {0, W, 0}, {L, 0, 0}, ceiling_rho},
      {"wall_x0", {0, 0, 0}, {0, W, 0}, {0, 0, H}, wall_rho},
      {"wall_x1", {L, 0, 0}, {0, 0, H}, {0, W, 0}, wall_rho},
      {"wall_y0", {0, 0, 0}, {0, 0, H}, {L, 0, 0}, wall_rho},
      {"wall_y1", {0, W, 0}, {L, 0, 0}, {0, 0, H}, wall_rho},
  };
}

/// The three-rack, four-receiver data-center pod.
///
/// In exact mode branch i of every ADT is aimed straight at receiver i; in
/// paper-angles mode the published integer angle tables are used verbatim.
inline Scenario paper_scenario(AimMode mode) {
  Scenario s;
  s.room = {8.0, 8.0, 3.0};
  s.surfaces = shoebox_surfaces(s.room, 0.8, 0.8, 0.3);

  const Vec3 rack_dims{0.6, 1.2, 1.75};
  s.racks = {{"rack1", {1.0, 1.0, 0.25}, rack_dims},
             {"rack2", {4.0, 4.0, 0.25}, rack_dims},
             {"rack3", {4.0, 7.0, 0.25}, rack_dims}};

  for (int i = 0; i < 4; ++i) {
    WfovReceiver rx;
    rx.name = "R" + std::to_string(i + 1);
    rx.position = {4.0, 1.0 + 2.0 * i, 3.0};
    rx.normal = {0.0, 0.0, -1.0};
    rx.fov_half_angle_deg = 90.0;
    rx.area_m2 = 20e-6;
    rx.responsivity_a_per_w = 0.6;
    s.receivers.push_back(rx);
  }

  struct Table {
    const char* name;
    Vec3 position;
    std::array<AimAngles, 4> angles;
  };
  const std::array<Table, 3> tables{{
      {"ADT1", {1.3, 1.6, 2.0}, {{{348, 20}, {27, 18}, {51, 13}, {63, 9}}}},
      {"ADT2", {4.0, 4.0, 2.0}, {{{270, 18}, {270, 45}, {90, 45}, {90, 18}}}},
      {"ADT3", {4.0, 6.7, 2.0}, {{{270, 10}, {270, 15}, {270, 30}, {90, 73}}}},
  }};
  for (const auto& t : tables) {
    AngleDiversityTransmitter adt;
    adt.name = t.name;
    for (std::size_t b = 0; b < 4; ++b) {
      TransmitterBranch br;
      br.position = t.position;
      br.aim = mode == AimMode::kExact ? aim_at(t.position, s.receivers[b].position) : t.angles[b];
      br.power_w = 0.150;
      br.half_power_semi_angle_deg = 2.0;
      adt.branches.push_back(br);
    }
    s.adts.push_back(adt);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Validation

enum class Severity { kError, kWarning };

struct Finding {
  Severity severity;
  std::string message;
};

inline bool has_errors(const std::vector<Finding>& findings) {
  for (const auto& f : findings) {
    if (f.severity == Severity::kError) return true;
  }
  return false;
}

inline std::string to_string(const Finding& f) {
  return std::string(f.severity == Severity::kError ? "error: " : "warning: ") + f.message;
}

namespace detail {

template <typename Range, typename NameOf>
void check_unique(const Range& items, NameOf name_of, const char* what,
                  std::vector<Finding>& out) {
  std::set<std::string> seen;
  for (const auto& item : items) {
    const std::string& n = name_of(item);
    if (n.empty()) out.push_back({Severity::kError, std::string(what) + " with empty name"});
    if (!seen.insert(n).second) {
      out.push_back({Severity::kError, std::string("duplicate ") + what + " name '" + n + "'"});
    }
  }
}

inline bool finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

}  // namespace detail

/// Checks model invariants and link plausibility.
///
/// Errors block simulation; warnings do not. When `requested_rate_hz` is set,
/// rates whose noise bandwidth would exceed the receiver are flagged.
inline std::vector<Finding> validate(const Scenario& s,
                                     std::optional<double> requested_rate_hz = std::nullopt) {
  std::vector<Finding> out;
  auto error = [&](std::string m) { out.push_back({Severity::kError, std::move(m)}); };
  auto warn = [&](std::string m) { out.push_back({Severity::kWarning, std::move(m)}); };

  if (!(s.room.length_m > 0.0 && s.room.width_m > 0.0 && s.room.height_m > 0.0)) {
    error("room dimensions must be positive");
    return out;
  }
  const Box room = s.room.box();
  constexpr double tol = 1e-9;
  const Vec3 room_center{s.room.length_m / 2, s.room.width_m / 2, s.room.height_m / 2};

  detail::check_unique(s.surfaces, [](const Surface& x) -> const std::string& { return x.name; },
                       "surface", out);
  for (const auto& sf : s.surfaces) {
    const double lu = norm(sf.edge_u);
    const double lv = norm(sf.edge_v);
    if (!(lu > 0.0 && lv > 0.0)) {
      error("surface '" + sf.name + "' has a zero-length edge");
      continue;
    }
    if (std::abs(dot(sf.edge_u, sf.edge_v)) > 1e-9 * lu * lv) {
      error("surface '" + sf.name + "' edges are not orthogonal");
    }
    if (!(sf.reflectivity >= 0.0 && sf.reflectivity <= 1.0)) {
      error("surface '" + sf.name + "' reflectivity outside [0, 1]");
    }
    const Vec3 corners[4] = {sf.origin, sf.origin + sf.edge_u, sf.origin + sf.edge_v,
                             sf.origin + sf.edge_u + sf.edge_v};
    for (const auto& c : corners) {
      if (!room.contains(c, tol)) {
        error("surface '" + sf.name + "' outside room volume");
        break;
      }
    }
    const Vec3 mid = sf.origin + (sf.edge_u + sf.edge_v) * 0.5;
    if (dot(sf.normal(), room_center - mid) <= 0.0) {
      warn("surface '" + sf.name + "' faces away from the room interior");
    }
  }

  detail::check_unique(s.racks, [](const Rack& x) -> const std::string& { return x.name; }, "rack",
                       out);
  for (const auto& r : s.racks) {
    if (!(r.dims_m.x > 0.0 && r.dims_m.y > 0.0 && r.dims_m.z > 0.0)) {
      error("rack '" + r.name + "' dimensions must be positive");
    }
    const Box b = r.box();
    if (!room.contains(b.min, tol) || !room.contains(b.max, tol)) {
      error("rack '" + r.name + "' outside room volume");
    }
  }

  detail::check_unique(
      s.adts, [](const AngleDiversityTransmitter& x) -> const std::string& { return x.name; },
      "adt", out);
  for (const auto& adt : s.adts) {
    if (adt.branches.empty()) error("adt '" + adt.name + "' has no branches");
    for (std::size_t i = 0; i < adt.branches.size(); ++i) {
      const auto& br = adt.branches[i];
      const std::string id = "adt '" + adt.name + "' branch " + std::to_string(i);
      if (!(br.power_w > 0.0)) error(id + " power must be > 0");
      if (!(br.half_power_semi_angle_deg > 0.0 && br.half_power_semi_angle_deg < 90.0)) {
        error(id + " half-power semi-angle must lie in (0, 90)");
      }
      if (!(br.aim.elevation_deg >= -90.0 && br.aim.elevation_deg <= 90.0)) {
        error(id + " elevation must lie in [-90, 90]");
      }
      if (!(br.aim.azimuth_deg >= 0.0 && br.aim.azimuth_deg < 360.0)) {
        error(id + " azimuth must lie in [0, 360)");
      }
      if (!detail::finite(br.position) || !room.contains(br.position, tol)) {
        error(id + " outside room volume");
      }
    }
  }

  detail::check_unique(s.receivers,
                       [](const WfovReceiver& x) -> const std::string& { return x.name; },
                       "receiver", out);
  for (const auto& rx : s.receivers) {
    const std::string id = "receiver '" + rx.name + "'";
    if (!(rx.area_m2 > 0.0)) error(id + " area must be > 0");
    if (!(rx.fov_half_angle_deg > 0.0 && rx.fov_half_angle_deg <= 90.0)) {
      error(id + " field of view half-angle must lie in (0, 90]");
    }
    if (!(rx.responsivity_a_per_w > 0.0)) error(id + " responsivity must be > 0");
    if (!(std::abs(norm(rx.normal) - 1.0) <= 1e-9)) error(id + " normal is not unit length");
    if (!detail::finite(rx.position) || !room.contains(rx.position, tol)) {
      error(id + " outside room volume");
    } else if (rx.position.z > s.room.height_m + tol) {
      error(id + " above the ceiling plane");
    }
  }

  const auto& n = s.noise;
  if (!(n.preamp_current_density_a_per_rthz >= 0.0) || !(n.receiver_bandwidth_hz > 0.0) ||
      !(n.background_power_w >= 0.0)) {
    error("noise parameters must be non-negative with a positive receiver bandwidth");
  }
  if (!(n.noise_bandwidth_factor > 0.0 && n.noise_bandwidth_factor <= 1.5)) {
    error("noise_bandwidth_factor must lie in (0, 1.5]");
  }

  const auto& sim = s.sim;
  if (!(sim.bin_width_s > 0.0)) error("sim bin_width_s must be > 0");
  if (!(sim.element_size_m > 0.0)) error("sim element_size_m must be > 0");
  if (sim.max_reflections < 0) error("sim max_reflections must be >= 0");
  if (sim.element_size_m > 0.0 && sim.max_reflections > 0) {
    const std::size_t count = detail::count_elements(s.surfaces, sim.element_size_m);
    if (count > sim.max_elements) {
      // enforced when the channel is computed
      warn("surface discretization needs " + std::to_string(count) + " elements, cap is " +
            std::to_string(sim.max_elements));
    }
  }

  if (requested_rate_hz && n.noise_bandwidth_factor > 0.0 &&
      n.noise_bandwidth_factor * *requested_rate_hz > n.receiver_bandwidth_hz) {
    std::ostringstream m;
    m << "requested rate " << *requested_rate_hz
      << " Hz needs more noise bandwidth than the receiver provides; bandwidth is capped";
    warn(m.str());
  }

  if (has_errors(out)) return out;

  // Link plausibility: cone coverage, FOV and rack occlusion.
  const Environment env = s.environment();
  for (const auto& adt : s.adts) {
    for (std::size_t i = 0; i < adt.branches.size(); ++i) {
      const auto& br = adt.branches[i];
      const std::string id = "adt '" + adt.name + "' branch " + std::to_string(i);
      const Vec3 aim = direction_from_angles(br.aim);
      bool any = false;
      for (const auto& rx : s.receivers) {
        const Vec3 delta = rx.position - br.position;
        if (norm(delta) == 0.0) continue;
        if (angle_between(aim, delta) > br.half_power_semi_angle_deg) continue;
        any = true;
        if (receiver_acceptance(rx, normalized(delta)) <= 0.0) {
          warn(id + " aimed at receiver '" + rx.name + "' outside its field of view");
        }
        for (std::size_t k = 0; k < s.racks.size(); ++k) {
          if (segment_intersects_box(br.position, rx.position, env.occluders[k])) {
            warn(id + " LOS to receiver '" + rx.name + "' blocked by rack '" + s.racks[k].name +
                 "'");
          }
        }
      }
      if (!any) warn(id + " has no receiver within half-power cone");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Link assignment

struct AssignedLink {
  std::size_t adt = 0;
  std::size_t branch = 0;
  std::optional<std::size_t> receiver;  // empty when no receiver gets power
};

struct LinkAssignment {
  std::vector<AssignedLink> links;
  std::vector<std::string> warnings;
};

/// Assigns each branch to the receiver with the largest LOS power. Ties go to
/// the earlier receiver.
inline LinkAssignment assign_links(const Scenario& s) {
  LinkAssignment out;
  for (std::size_t a = 0; a < s.adts.size(); ++a) {
    const auto& adt = s.adts[a];
    for (std::size_t b = 0; b < adt.branches.size(); ++b) {
      AssignedLink link{a, b, std::nullopt};
      double best = 0.0;
      for (std::size_t r = 0; r < s.receivers.size(); ++r) {
        const double p = los_power(adt.branches[b], s.receivers[r]);
        if (p > best) {
          best = p;
          link.receiver = r;
        }
      }
      if (!link.receiver) {
        out.warnings.push_back("adt '" + adt.name + "' branch " + std::to_string(b) +
                               " reaches no receiver; assigned none");
      }
      out.links.push_back(link);
    }
  }
  return out;
}

}  // namespace owdc
