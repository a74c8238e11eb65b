// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include "owdc/errors.hpp"
#include "owdc/impulse_response.hpp"
#include "owdc/optics.hpp"

namespace owdc {

inline constexpr double kElectronCharge = 1.602176634e-19;  // C

/// Reported in place of 10*log10(0).
inline constexpr double kSnrDbFloor = -300.0;

struct NoiseParams {
  double preamp_current_density_a_per_rthz = 4.47e-12;
  double receiver_bandwidth_hz = 5e9;
  double background_power_w = 0.0;
  // noise bandwidth = factor * bit rate, capped at the receiver bandwidth
  double noise_bandwidth_factor = 0.7;

  double noise_bandwidth(double bit_rate_hz) const {
    return std::min(noise_bandwidth_factor * bit_rate_hz, receiver_bandwidth_hz);
  }
  /// Highest bit rate whose noise bandwidth still fits the receiver.
  double ceiling_rate() const { return receiver_bandwidth_hz / noise_bandwidth_factor; }

  friend bool operator==(const NoiseParams&, const NoiseParams&) = default;
};

struct NoiseVariance {
  double preamp_a2 = 0.0;
  double background_a2 = 0.0;
  double signal_a2 = 0.0;

  double total() const { return preamp_a2 + background_a2 + signal_a2; }
};

struct EyePowers {
  double ps1_w = 0.0;
  double ps0_w = 0.0;
};

struct SnrValue {
  double linear = 0.0;
  double db = kSnrDbFloor;
  bool floored = true;  // db is the floor value, not a logarithm
};

struct LinkBudget {
  double bit_rate_hz = 0.0;
  double ps1_w = 0.0;
  double ps0_w = 0.0;
  double sigma2_preamp_a2 = 0.0;
  double sigma2_background_a2 = 0.0;
  double sigma2_signal_a2 = 0.0;
  double snr_linear = 0.0;
  double snr_db = kSnrDbFloor;
  double ber = 0.5;
  bool eye_closed = false;

  double sigma2_total_a2() const {
    return sigma2_preamp_a2 + sigma2_background_a2 + sigma2_signal_a2;
  }
};

/// Gaussian tail probability.
inline double q_function(double x) {
  if (std::isnan(x)) throw DomainError("q_function: NaN argument");
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

/// OOK bit error rate for a given electrical SNR.
inline double ber_from_snr(double snr_linear) {
  if (!(snr_linear >= 0.0)) throw DomainError("ber_from_snr: SNR must be >= 0");
  return q_function(std::sqrt(snr_linear));
}

/// Worst-case eye powers from a binned impulse response.
///
/// The response is convolved with a rectangular pulse of one bit period T and
/// sampled at the peak t_s. Ps1 is that peak (isolated '1'); Ps0 is the sum of
/// the pulse sampled at t_s + kT for every k != 0 (isolated '0' among ones).
/// Each bin falls into exactly one slot, so the latter equals total - Ps1.
inline EyePowers eye_powers(const ImpulseResponse& ir, double bit_rate_hz) {
  if (!(bit_rate_hz > 0.0)) throw DomainError("eye_powers: bit rate must be > 0");
  if (ir.bins.empty()) throw DomainError("eye_powers: empty impulse response");

  // Bin i sits at time i*w; the window (t - T, t] at t = m*w covers bins
  // m - span + 1 .. m where span = ceil(T / w).
  const double ratio = (1.0 / bit_rate_hz) / ir.bin_width_s;
  const double nearest = std::round(ratio);
  std::size_t span = std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)
                         ? static_cast<std::size_t>(nearest)
                         : static_cast<std::size_t>(std::ceil(ratio));
  span = std::max<std::size_t>(span, 1);

  const auto& h = ir.bins;
  double peak = 0.0;
  for (std::size_t m = 0; m < h.size(); ++m) {
    if (h[m] == 0.0) continue;  // the peak window always ends on a nonzero bin
    const std::size_t lo = m + 1 >= span ? m + 1 - span : 0;
    double w = 0.0;
    for (std::size_t k = lo; k <= m; ++k) w += h[k];
    peak = std::max(peak, w);
  }

  double total = 0.0;
  for (double v : h) total += v;
  return {peak, std::max(0.0, total - peak)};
}

/// Noise variance components for a received signal power.
inline NoiseVariance noise_variance(double received_signal_power_w, const NoiseParams& params,
                                    double bit_rate_hz, double responsivity) {
  const double bw = params.noise_bandwidth(bit_rate_hz);
  NoiseVariance v;
  v.preamp_a2 = params.preamp_current_density_a_per_rthz *
                params.preamp_current_density_a_per_rthz * bw;
  v.background_a2 = 2.0 * kElectronCharge * responsivity * params.background_power_w * bw;
  v.signal_a2 = 2.0 * kElectronCharge * responsivity * received_signal_power_w * bw;
  return v;
}

/// OOK electrical SNR (R (Ps1 - Ps0))^2 / sigma_t^2. A closed eye gives 0.
inline SnrValue snr(double ps1_w, double ps0_w, double sigma_t2_a2, double responsivity) {
  if (!(sigma_t2_a2 > 0.0)) throw DomainError("snr: total noise variance must be > 0");
  SnrValue out;
  if (ps1_w <= ps0_w) return out;
  const double signal = responsivity * (ps1_w - ps0_w);
  out.linear = signal * signal / sigma_t2_a2;
  if (out.linear > 0.0) {
    out.db = 10.0 * std::log10(out.linear);
    out.floored = false;
  }
  return out;
}

/// Full link budget for a precomputed channel at one bit rate.
inline LinkBudget link_budget(const ImpulseResponse& ir, double responsivity,
                              const NoiseParams& noise, double bit_rate_hz) {
  LinkBudget lb;
  lb.bit_rate_hz = bit_rate_hz;
  EyePowers eye;
  if (!ir.bins.empty()) eye = eye_powers(ir, bit_rate_hz);
  lb.ps1_w = eye.ps1_w;
  lb.ps0_w = eye.ps0_w;
  lb.eye_closed = eye.ps1_w <= eye.ps0_w;

  // signal shot noise at the '1' level
  const NoiseVariance nv = noise_variance(eye.ps1_w, noise, bit_rate_hz, responsivity);
  lb.sigma2_preamp_a2 = nv.preamp_a2;
  lb.sigma2_background_a2 = nv.background_a2;
  lb.sigma2_signal_a2 = nv.signal_a2;

  const SnrValue s = lb.eye_closed ? SnrValue{}
                                    : snr(lb.ps1_w, lb.ps0_w, lb.sigma2_total_a2(), responsivity);
  lb.snr_linear = s.linear;
  lb.snr_db = s.db;
  lb.ber = ber_from_snr(s.linear);
  return lb;
}

inline LinkBudget evaluate_link(const Environment& env, const TransmitterBranch& branch,
                                const WfovReceiver& rx, const NoiseParams& noise,
                                double bit_rate_hz, const ChannelParams& params) {
  if (!(bit_rate_hz > 0.0)) throw DomainError("evaluate_link: bit rate must be > 0");
  return link_budget(impulse_response(env, branch, rx, params), rx.responsivity_a_per_w, noise,
                     bit_rate_hz);
}

enum class RateStatus { kBisected, kCeiling, kNoService };

struct RateResult {
  double bit_rate_hz = 0.0;
  RateStatus status = RateStatus::kNoService;
};

inline constexpr double kMinSearchRate = 1e6;
inline constexpr double kRateRelativeTolerance = 1e-3;

/// Largest bit rate meeting `target_ber` on a precomputed channel.
///
/// Searches [1 Mb/s, ceiling] where the ceiling is the rate whose noise
/// bandwidth equals the receiver bandwidth. The bracket is checked before
/// bisecting; the returned rate always satisfies the target.
inline RateResult achievable_rate(const ImpulseResponse& ir, double responsivity,
                                  const NoiseParams& noise, double target_ber) {
  if (!(target_ber > 0.0 && target_ber < 0.5)) {
    throw DomainError("achievable_rate: target BER must lie in (0, 0.5)");
  }
  auto meets = [&](double rate) {
    return link_budget(ir, responsivity, noise, rate).ber <= target_ber;
  };
  double hi = noise.ceiling_rate();
  double lo = kMinSearchRate;
  if (meets(hi)) return {hi, RateStatus::kCeiling};
  if (!(hi > lo) || !meets(lo)) return {0.0, RateStatus::kNoService};
  while (hi - lo > kRateRelativeTolerance * hi) {
    const double mid = 0.5 * (lo + hi);
    if (meets(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {lo, RateStatus::kBisected};
}

inline RateResult achievable_rate(const Environment& env, const TransmitterBranch& branch,
                                  const WfovReceiver& rx, const NoiseParams& noise,
                                  double target_ber, const ChannelParams& params) {
  if (!(target_ber > 0.0 && target_ber < 0.5)) {
    throw DomainError("achievable_rate: target BER must lie in (0, 0.5)");
  }
  return achievable_rate(impulse_response(env, branch, rx, params), rx.responsivity_a_per_w,
                         noise, target_ber);
}

}  // namespace owdc
