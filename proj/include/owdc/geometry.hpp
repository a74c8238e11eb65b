// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>

#include "owdc/errors.hpp"

namespace owdc {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
constexpr double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

/// Point or direction in room coordinates (meters).
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

/// Unit vector along v. Throws DomainError for the zero vector.
inline Vec3 normalized(const Vec3& v) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw DomainError("cannot normalize a zero or non-finite vector");
  }
  return v * (1.0 / n);
}

/// Branch pointing angles.
///
/// Azimuth is measured in the horizontal x-y plane counterclockwise from +x;
/// elevation is measured upward from that plane. Stored in degrees.
struct AimAngles {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;

  friend constexpr bool operator==(const AimAngles&, const AimAngles&) = default;
};

/// Wraps an azimuth into [0, 360).
inline double normalize_azimuth(double az_deg) {
  double a = std::fmod(az_deg, 360.0);
  if (a < 0.0) a += 360.0;
  // fmod of a tiny negative value can round up to exactly 360
  if (a >= 360.0) a = 0.0;
  return a;
}

inline Vec3 direction_from_angles(const AimAngles& a) {
  if (!(a.elevation_deg >= -90.0 && a.elevation_deg <= 90.0)) {
    throw DomainError("elevation must lie in [-90, 90] degrees");
  }
  if (!std::isfinite(a.azimuth_deg)) throw DomainError("azimuth must be finite");
  const double az = deg_to_rad(a.azimuth_deg);
  const double el = deg_to_rad(a.elevation_deg);
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

/// Inverse of direction_from_angles. Vertical vectors get azimuth 0.
inline AimAngles angles_from_direction(const Vec3& v) {
  const Vec3 u = normalized(v);
  const double horizontal = std::hypot(u.x, u.y);
  const double el = rad_to_deg(std::atan2(u.z, horizontal));
  const double az = horizontal > 0.0 ? normalize_azimuth(rad_to_deg(std::atan2(u.y, u.x))) : 0.0;
  return {az, el};
}

inline AimAngles aim_at(const Vec3& tx_pos, const Vec3& rx_pos) {
  if (tx_pos == rx_pos) throw DomainError("aim_at: transmitter and target coincide");
  return angles_from_direction(rx_pos - tx_pos);
}

/// Angle between two non-zero vectors in degrees, in [0, 180].
inline double angle_between(const Vec3& u, const Vec3& v) {
  const Vec3 a = normalized(u);
  const Vec3 b = normalized(v);
  // atan2 keeps precision near 0 and 180 degrees, where acos does not
  return rad_to_deg(std::atan2(norm(cross(a, b)), dot(a, b)));
}

/// Axis-aligned box, used for rack bodies.
struct Box {
  Vec3 min;
  Vec3 max;

  bool contains(const Vec3& p, double tol = 0.0) const {
    return p.x >= min.x - tol && p.x <= max.x + tol && p.y >= min.y - tol &&
           p.y <= max.y + tol && p.z >= min.z - tol && p.z <= max.z + tol;
  }
};

/// True when the open segment (a, b) passes through the interior of the box.
///
/// Endpoints lying on the box surface (an emitter on a rack top) do not count
/// as an intersection; only penetration deeper than `eps` along the segment
/// does.
inline bool segment_intersects_box(const Vec3& a, const Vec3& b, const Box& box,
                                   double eps = 1e-9) {
  const double da[3] = {b.x - a.x, b.y - a.y, b.z - a.z};
  const double pa[3] = {a.x, a.y, a.z};
  const double lo[3] = {box.min.x, box.min.y, box.min.z};
  const double hi[3] = {box.max.x, box.max.y, box.max.z};
  double t0 = 0.0;
  double t1 = 1.0;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(da[i]) < 1e-15) {
      // parallel to the slab: must be strictly inside it
      if (pa[i] <= lo[i] + eps || pa[i] >= hi[i] - eps) return false;
      continue;
    }
    double ta = (lo[i] - pa[i]) / da[i];
    double tb = (hi[i] - pa[i]) / da[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 >= t1) return false;
  }
  const double length = std::sqrt(da[0] * da[0] + da[1] * da[1] + da[2] * da[2]);
  return (t1 - t0) * length > eps;
}

/// Point on top of a rack.
///
/// `rack_base` is the center of the rack's bottom face and `rack_dims` is
/// (length along x, width along y, height). `offset_xy` is measured from the
/// footprint center and must stay within the footprint (edges inclusive).
inline Vec3 rack_top_point(const Vec3& rack_base, const Vec3& rack_dims,
                           std::pair<double, double> offset_xy) {
  constexpr double tol = 1e-12;
  const auto [dx, dy] = offset_xy;
  if (std::abs(dx) > rack_dims.x / 2.0 + tol || std::abs(dy) > rack_dims.y / 2.0 + tol) {
    throw ValidationError("rack_top_point: offset lies outside the rack footprint");
  }
  return {rack_base.x + dx, rack_base.y + dy, rack_base.z + rack_dims.z};
}

/// Bounding box of a rack given its bottom-center base point and dimensions.
inline Box rack_box(const Vec3& rack_base, const Vec3& rack_dims) {
  return {{rack_base.x - rack_dims.x / 2.0, rack_base.y - rack_dims.y / 2.0, rack_base.z},
          {rack_base.x + rack_dims.x / 2.0, rack_base.y + rack_dims.y / 2.0,
           rack_base.z + rack_dims.z}};
}

}  // namespace owdc
