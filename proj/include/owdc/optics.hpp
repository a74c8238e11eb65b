// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "owdc/errors.hpp"
#include "owdc/geometry.hpp"

namespace owdc {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// One narrow-beam Lambertian emitter of an angle diversity transmitter.
struct TransmitterBranch {
  Vec3 position;
  AimAngles aim;
  double power_w = 0.0;
  double half_power_semi_angle_deg = 0.0;

  friend bool operator==(const TransmitterBranch&, const TransmitterBranch&) = default;
};

struct AngleDiversityTransmitter {
  std::string name;
  std::vector<TransmitterBranch> branches;

  friend bool operator==(const AngleDiversityTransmitter&,
                         const AngleDiversityTransmitter&) = default;
};

/// Bare-area wide field of view photodetector.
struct WfovReceiver {
  std::string name;
  Vec3 position;
  Vec3 normal{0.0, 0.0, -1.0};
  double fov_half_angle_deg = 90.0;
  double area_m2 = 0.0;
  double responsivity_a_per_w = 0.0;

  friend bool operator==(const WfovReceiver&, const WfovReceiver&) = default;
};

/// Rectangular diffuse reflector. The reflecting side faces
/// normalized(cross(edge_u, edge_v)).
struct Surface {
  std::string name;
  Vec3 origin;
  Vec3 edge_u;
  Vec3 edge_v;
  double reflectivity = 0.0;

  Vec3 normal() const { return normalized(cross(edge_u, edge_v)); }
  double area() const { return norm(cross(edge_u, edge_v)); }

  friend bool operator==(const Surface&, const Surface&) = default;
};

/// Lambertian mode number n for a given semi-angle at half power.
inline double lambertian_order(double half_power_semi_angle_deg) {
  if (!(half_power_semi_angle_deg > 0.0 && half_power_semi_angle_deg < 90.0)) {
    throw DomainError("half-power semi-angle must lie in (0, 90) degrees");
  }
  return -std::log(2.0) / std::log(std::cos(deg_to_rad(half_power_semi_angle_deg)));
}

/// Radiant intensity (W/sr) of a branch toward `direction`:
/// (n+1)/(2 pi) * P * cos^n(phi), zero at and beyond 90 degrees off-axis.
inline double radiant_intensity(const TransmitterBranch& branch, const Vec3& direction) {
  const double n = lambertian_order(branch.half_power_semi_angle_deg);
  const double cos_phi = dot(direction_from_angles(branch.aim), normalized(direction));
  if (cos_phi <= 0.0) return 0.0;
  return (n + 1.0) / (2.0 * kPi) * branch.power_w * std::pow(std::min(cos_phi, 1.0), n);
}

/// Cosine of the incidence angle of light travelling along `travel_dir`
/// (unit) onto the receiver, or 0 when outside the field of view.
inline double receiver_acceptance(const WfovReceiver& rx, const Vec3& travel_dir) {
  const double cos_theta = -dot(travel_dir, rx.normal);
  if (cos_theta <= 0.0) return 0.0;
  const double cos_fov = std::cos(deg_to_rad(rx.fov_half_angle_deg));
  // FOV of exactly 90 degrees accepts the full hemisphere
  if (rx.fov_half_angle_deg < 90.0 && cos_theta < cos_fov) return 0.0;
  return cos_theta;
}

/// Direct-path received optical power in the small-aperture approximation.
inline double los_power(const TransmitterBranch& branch, const WfovReceiver& rx) {
  const Vec3 delta = rx.position - branch.position;
  const double d2 = dot(delta, delta);
  if (!(d2 > 0.0)) throw DomainError("los_power: branch and receiver coincide");
  const Vec3 u = delta * (1.0 / std::sqrt(d2));
  const double cos_theta = receiver_acceptance(rx, u);
  if (cos_theta <= 0.0) return 0.0;
  return radiant_intensity(branch, u) * rx.area_m2 * cos_theta / d2;
}

}  // namespace owdc
