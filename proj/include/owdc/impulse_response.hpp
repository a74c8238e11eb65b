// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "owdc/errors.hpp"
#include "owdc/geometry.hpp"
#include "owdc/optics.hpp"

namespace owdc {

/// Discretization and resource limits for the multipath channel.
struct ChannelParams {
  double bin_width_s = 1e-10;
  double element_size_m = 0.1;
  int max_reflections = 1;
  std::size_t max_elements = 200000;
  // Upper bound on element-to-element gain evaluations for orders >= 2.
  double max_element_pairs = 4e8;
  // Rack bodies always block reflected paths; this flag also applies them to LOS.
  bool los_occlusion = false;

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

/// Reflecting surfaces and opaque bodies of a room.
struct Environment {
  std::vector<Surface> surfaces;
  std::vector<Box> occluders;
};

/// Received optical power binned by arrival time for one branch/receiver pair.
struct ImpulseResponse {
  double bin_width_s = 0.0;
  double start_time_s = 0.0;
  std::vector<double> bins;  // W per bin
  double los_power_w = 0.0;
  std::optional<double> los_delay_s;

  double bin_time(std::size_t i) const {
    return start_time_s + static_cast<double>(i) * bin_width_s;
  }
};

inline double channel_total_power(const ImpulseResponse& ir) {
  return std::accumulate(ir.bins.begin(), ir.bins.end(), 0.0);
}

namespace detail {

struct Element {
  Vec3 center;
  Vec3 normal;
  Vec3 half_u;  // half edge vectors
  Vec3 half_v;
  double area = 0.0;
  double reflectivity = 0.0;
};

inline std::size_t count_elements(const std::vector<Surface>& surfaces, double element_size) {
  std::size_t total = 0;
  for (const auto& s : surfaces) {
    const auto nu = static_cast<std::size_t>(std::max(1.0, std::ceil(norm(s.edge_u) / element_size - 1e-9)));
    const auto nv = static_cast<std::size_t>(std::max(1.0, std::ceil(norm(s.edge_v) / element_size - 1e-9)));
    total += nu * nv;
  }
  return total;
}

inline std::vector<Element> discretize(const std::vector<Surface>& surfaces, double element_size) {
  std::vector<Element> out;
  for (const auto& s : surfaces) {
    const auto nu = static_cast<int>(std::max(1.0, std::ceil(norm(s.edge_u) / element_size - 1e-9)));
    const auto nv = static_cast<int>(std::max(1.0, std::ceil(norm(s.edge_v) / element_size - 1e-9)));
    const Vec3 du = s.edge_u * (1.0 / nu);
    const Vec3 dv = s.edge_v * (1.0 / nv);
    const Vec3 n = s.normal();
    const double area = s.area() / (static_cast<double>(nu) * nv);
    for (int i = 0; i < nu; ++i) {
      for (int j = 0; j < nv; ++j) {
        const Vec3 c = s.origin + du * (i + 0.5) + dv * (j + 0.5);
        out.push_back({c, n, du * 0.5, dv * 0.5, area, s.reflectivity});
      }
    }
  }
  return out;
}

inline bool occluded(const std::vector<Box>& boxes, const Vec3& a, const Vec3& b) {
  return std::any_of(boxes.begin(), boxes.end(),
                     [&](const Box& box) { return segment_intersects_box(a, b, box); });
}

/// Power a branch deposits on a surface element.
///
/// Narrow beams are much smaller than an element, so elements near the beam
/// axis are integrated on an s x s sub-grid sized from the beam width.
inline double power_onto_element(const TransmitterBranch& branch, double lambert_n,
                                 const Vec3& aim_dir, const Element& e) {
  const Vec3 to_center = e.center - branch.position;
  const double d_center = norm(to_center);
  if (!(d_center > 0.0)) return 0.0;

  const double angular_radius = norm(e.half_u + e.half_v) / d_center;
  const double cos_center = dot(aim_dir, to_center) / d_center;
  const double phi_center = std::acos(std::clamp(cos_center, -1.0, 1.0));
  // cos^n below 1e-16 contributes nothing measurable
  const double phi_cut = std::acos(std::exp(std::log(1e-16) / lambert_n));
  const double semi = deg_to_rad(branch.half_power_semi_angle_deg);

  int s = 1;
  if (phi_center - angular_radius < phi_cut) {
    s = static_cast<int>(std::ceil(2.0 * angular_radius / (semi / 4.0)));
    s = std::clamp(s, 1, 64);
  }

  const double prefactor = (lambert_n + 1.0) / (2.0 * kPi) * branch.power_w;
  const double sub_area = e.area / (static_cast<double>(s) * s);
  double total = 0.0;
  for (int i = 0; i < s; ++i) {
    const double fu = (2.0 * i + 1.0) / s - 1.0;
    for (int j = 0; j < s; ++j) {
      const double fv = (2.0 * j + 1.0) / s - 1.0;
      const Vec3 p = e.center + e.half_u * fu + e.half_v * fv;
      const Vec3 delta = p - branch.position;
      const double d2 = dot(delta, delta);
      const double d = std::sqrt(d2);
      const double cos_phi = dot(aim_dir, delta) / d;
      const double cos_in = -dot(delta, e.normal) / d;
      if (cos_phi <= 0.0 || cos_in <= 0.0) continue;
      total += prefactor * std::pow(std::min(cos_phi, 1.0), lambert_n) * sub_area * cos_in / d2;
    }
  }
  return total;
}

/// Fraction of power reflected by element `from` (order-1 Lambertian) that
/// lands on a small aperture of `area` and orientation `normal` at `to`.
inline double diffuse_gain(const Element& from, const Vec3& to, const Vec3& to_normal,
                           double to_area, double& distance) {
  const Vec3 delta = to - from.center;
  const double d2 = dot(delta, delta);
  distance = std::sqrt(d2);
  if (!(d2 > 0.0)) return 0.0;
  const double cos_out = dot(delta, from.normal) / distance;
  const double cos_in = -dot(delta, to_normal) / distance;
  if (cos_out <= 0.0 || cos_in <= 0.0) return 0.0;
  return cos_out / kPi * to_area * cos_in / d2;
}

class BinAccumulator {
 public:
  explicit BinAccumulator(double width) : width_(width) {}

  void add(double time_s, double power_w) {
    if (power_w == 0.0) return;
    const auto idx = static_cast<std::size_t>(std::floor(time_s / width_));
    if (idx >= bins_.size()) bins_.resize(idx + 1, 0.0);
    bins_[idx] += power_w;
  }

  std::size_t index(double time_s) const {
    return static_cast<std::size_t>(std::floor(time_s / width_));
  }

  std::vector<double> take() && { return std::move(bins_); }

 private:
  double width_;
  std::vector<double> bins_;
};

}  // namespace detail

/// Ray-traced multipath impulse response of one branch/receiver channel.
///
/// Order 0 is the analytic LOS path. Every room surface is cut into square
/// elements; each reflection order treats elements first as receivers of the
/// previous order and then as ideal diffuse (order-1 Lambertian) emitters
/// scaled by their reflectivity. Power lands in time bins by total path
/// delay. Order 1 keeps exact continuous path delays; orders >= 2 propagate
/// per-element arrival histograms, re-emitting from each bin center.
inline ImpulseResponse impulse_response(const Environment& env, const TransmitterBranch& branch,
                                        const WfovReceiver& rx, const ChannelParams& params) {
  if (params.max_reflections < 0) throw DomainError("max_reflections must be >= 0");
  if (!(params.bin_width_s > 0.0)) throw DomainError("bin_width_s must be > 0");
  if (!(params.element_size_m > 0.0)) throw DomainError("element_size_m must be > 0");

  const double width = params.bin_width_s;
  detail::BinAccumulator acc(width);
  ImpulseResponse ir;
  ir.bin_width_s = width;
  ir.start_time_s = 0.0;

  const double lambert_n = lambertian_order(branch.half_power_semi_angle_deg);
  const Vec3 aim_dir = direction_from_angles(branch.aim);

  double los = los_power(branch, rx);
  if (params.los_occlusion && los > 0.0 && detail::occluded(env.occluders, branch.position, rx.position)) {
    los = 0.0;
  }
  if (los > 0.0) {
    const double delay = norm(rx.position - branch.position) / kSpeedOfLight;
    acc.add(delay, los);
    ir.los_power_w = los;
    ir.los_delay_s = delay;
  }

  if (params.max_reflections == 0) {
    ir.bins = std::move(acc).take();
    return ir;
  }

  const std::size_t n_elements = detail::count_elements(env.surfaces, params.element_size_m);
  if (n_elements > params.max_elements) {
    throw ResourceError("surface discretization needs " + std::to_string(n_elements) +
                        " elements, cap is " + std::to_string(params.max_elements));
  }
  if (params.max_reflections >= 2) {
    const double pairs = static_cast<double>(n_elements) * static_cast<double>(n_elements) *
                         (params.max_reflections - 1);
    if (pairs > params.max_element_pairs) {
      throw ResourceError("multi-bounce evaluation needs " + std::to_string(pairs) +
                          " element pairs, cap is " + std::to_string(params.max_element_pairs));
    }
  }
  const std::vector<detail::Element> elements = detail::discretize(env.surfaces, params.element_size_m);
  const std::size_t n = elements.size();

  // First bounce: exact delays.
  std::vector<double> incident(n, 0.0);
  std::vector<double> first_delay(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = elements[i];
    if (e.reflectivity <= 0.0) continue;
    if (detail::occluded(env.occluders, branch.position, e.center)) continue;
    incident[i] = detail::power_onto_element(branch, lambert_n, aim_dir, e);
    first_delay[i] = norm(e.center - branch.position) / kSpeedOfLight;
  }

  auto to_receiver = [&](const detail::Element& e, double& distance) {
    const double g = detail::diffuse_gain(e, rx.position, rx.normal, rx.area_m2, distance);
    if (g <= 0.0) return 0.0;
    const double cos_theta = receiver_acceptance(rx, normalized(rx.position - e.center));
    if (cos_theta <= 0.0) return 0.0;
    if (detail::occluded(env.occluders, e.center, rx.position)) return 0.0;
    return g;
  };

  std::vector<double> rx_gain(n, 0.0);
  std::vector<double> rx_delay(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    rx_gain[i] = to_receiver(elements[i], d);
    rx_delay[i] = d / kSpeedOfLight;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (incident[i] <= 0.0 || rx_gain[i] <= 0.0) continue;
    acc.add(first_delay[i] + rx_delay[i], elements[i].reflectivity * incident[i] * rx_gain[i]);
  }

  if (params.max_reflections >= 2) {
    // Per-element arrival histograms for the current order.
    std::vector<std::vector<double>> arrivals(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (incident[i] <= 0.0) continue;
      const std::size_t b = acc.index(first_delay[i]);
      arrivals[i].assign(b + 1, 0.0);
      arrivals[i][b] = incident[i];
    }

    for (int order = 2; order <= params.max_reflections; ++order) {
      std::vector<std::vector<double>> next(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& src = arrivals[i];
        const auto& ei = elements[i];
        if (src.empty() || ei.reflectivity <= 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          const auto& ej = elements[j];
          double d = 0.0;
          const double g = detail::diffuse_gain(ei, ej.center, ej.normal, ej.area, d);
          if (g <= 0.0) continue;
          if (detail::occluded(env.occluders, ei.center, ej.center)) continue;
          const double hop = d / kSpeedOfLight;
          auto& dst = next[j];
          for (std::size_t b = 0; b < src.size(); ++b) {
            if (src[b] == 0.0) continue;
            const double t = (static_cast<double>(b) + 0.5) * width + hop;
            const std::size_t k = acc.index(t);
            if (k >= dst.size()) dst.resize(k + 1, 0.0);
            dst[k] += ei.reflectivity * src[b] * g;
          }
        }
      }
      arrivals = std::move(next);
      for (std::size_t j = 0; j < n; ++j) {
        if (arrivals[j].empty() || rx_gain[j] <= 0.0) continue;
        const double scale = elements[j].reflectivity * rx_gain[j];
        for (std::size_t b = 0; b < arrivals[j].size(); ++b) {
          acc.add((static_cast<double>(b) + 0.5) * width + rx_delay[j], arrivals[j][b] * scale);
        }
      }
    }
  }

  ir.bins = std::move(acc).take();
  return ir;
}

}  // namespace owdc
