// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "owdc/impulse_response.hpp"
#include "owdc/linkbudget.hpp"
#include "owdc/scenario.hpp"

namespace owdc {

/// Runs fn(i) for i in [0, n) on a small worker pool. Each call must only
/// write its own output slot; the first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned max_workers = 0) {
  unsigned workers = max_workers ? max_workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

inline std::string rate_status_name(RateStatus s) {
  switch (s) {
    case RateStatus::kBisected:
      return "bisected";
    case RateStatus::kCeiling:
      return "ceiling";
    case RateStatus::kNoService:
      return "no_service";
  }
  return "unknown";
}

/// One evaluated branch-to-receiver link.
struct ReportRow {
  std::string adt;
  std::size_t branch = 0;
  std::string receiver;
  double distance_m = 0.0;
  double responsivity_a_per_w = 0.0;
  LinkBudget budget;
  double target_ber = 0.0;
  RateResult rate;
};

struct LinkJob {
  std::size_t adt = 0;
  std::size_t branch = 0;
  std::size_t receiver = 0;
};

/// Links with an assigned receiver, in (adt, branch) order.
inline std::vector<LinkJob> assigned_jobs(const Scenario& s) {
  std::vector<LinkJob> jobs;
  for (const auto& l : assign_links(s).links) {
    if (l.receiver) jobs.push_back({l.adt, l.branch, *l.receiver});
  }
  return jobs;
}

inline std::vector<ImpulseResponse> link_channels(const Scenario& s,
                                                  const std::vector<LinkJob>& jobs,
                                                  unsigned workers = 0) {
  const Environment env = s.environment();
  std::vector<ImpulseResponse> irs(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const auto& j = jobs[i];
    irs[i] = impulse_response(env, s.adts[j.adt].branches[j.branch], s.receivers[j.receiver], s.sim);
  }, workers);
  return irs;
}

inline ReportRow make_row(const Scenario& s, const LinkJob& job, const ImpulseResponse& ir,
                          double bit_rate_hz, double target_ber) {
  const auto& br = s.adts[job.adt].branches[job.branch];
  const auto& rx = s.receivers[job.receiver];
  ReportRow row;
  row.adt = s.adts[job.adt].name;
  row.branch = job.branch;
  row.receiver = rx.name;
  row.distance_m = norm(rx.position - br.position);
  row.responsivity_a_per_w = rx.responsivity_a_per_w;
  row.budget = link_budget(ir, rx.responsivity_a_per_w, s.noise, bit_rate_hz);
  row.target_ber = target_ber;
  row.rate = achievable_rate(ir, rx.responsivity_a_per_w, s.noise, target_ber);
  return row;
}

/// Link budget and achievable rate for every assigned link. `workers` = 0
/// picks the hardware thread count; results do not depend on it.
inline std::vector<ReportRow> evaluate_scenario(const Scenario& s, double bit_rate_hz,
                                                double target_ber, unsigned workers = 0) {
  if (!(bit_rate_hz > 0.0)) throw DomainError("bit rate must be > 0");
  if (!(target_ber > 0.0 && target_ber < 0.5)) throw DomainError("target BER must lie in (0, 0.5)");
  const auto jobs = assigned_jobs(s);
  const auto irs = link_channels(s, jobs, workers);
  std::vector<ReportRow> rows(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    rows[i] = make_row(s, jobs[i], irs[i], bit_rate_hz, target_ber);
  }, workers);
  return rows;
}

// ---------------------------------------------------------------------------
// Formatting

/// Locale-independent shortest-ish float text with 9 significant digits.
inline std::string format_float(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

inline void write_run_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << "adt,branch,receiver,distance_m,bit_rate_hz,ps1_w,ps0_w,sigma2_preamp_a2,"
        "sigma2_background_a2,sigma2_signal_a2,snr_linear,snr_db,ber,achievable_rate_hz,"
        "rate_status\n";
  for (const auto& r : rows) {
    const auto& b = r.budget;
    os << r.adt << ',' << r.branch << ',' << r.receiver << ',' << format_float(r.distance_m) << ','
       << format_float(b.bit_rate_hz) << ',' << format_float(b.ps1_w) << ','
       << format_float(b.ps0_w) << ',' << format_float(b.sigma2_preamp_a2) << ','
       << format_float(b.sigma2_background_a2) << ',' << format_float(b.sigma2_signal_a2) << ','
       << format_float(b.snr_linear) << ',' << format_float(b.snr_db) << ','
       << format_float(b.ber) << ',' << format_float(r.rate.bit_rate_hz) << ','
       << rate_status_name(r.rate.status) << '\n';
  }
}

inline nlohmann::json run_rows_to_json(const std::vector<ReportRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    const auto& b = r.budget;
    out.push_back({{"adt", r.adt},
                   {"branch", r.branch},
                   {"receiver", r.receiver},
                   {"distance_m", r.distance_m},
                   {"responsivity_a_per_w", r.responsivity_a_per_w},
                   {"bit_rate_hz", b.bit_rate_hz},
                   {"ps1_w", b.ps1_w},
                   {"ps0_w", b.ps0_w},
                   {"sigma2_preamp_a2", b.sigma2_preamp_a2},
                   {"sigma2_background_a2", b.sigma2_background_a2},
                   {"sigma2_signal_a2", b.sigma2_signal_a2},
                   {"snr_linear", b.snr_linear},
                   {"snr_db", b.snr_db},
                   {"ber", b.ber},
                   {"achievable_rate_hz", r.rate.bit_rate_hz},
                   {"rate_status", rate_status_name(r.rate.status)}});
  }
  return out;
}

inline void write_rates_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << "adt,branch,receiver,distance_m,target_ber,achievable_rate_hz,rate_status\n";
  for (const auto& r : rows) {
    os << r.adt << ',' << r.branch << ',' << r.receiver << ',' << format_float(r.distance_m) << ','
       << format_float(r.target_ber) << ',' << format_float(r.rate.bit_rate_hz) << ','
       << rate_status_name(r.rate.status) << '\n';
  }
}

inline nlohmann::json rates_rows_to_json(const std::vector<ReportRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"adt", r.adt},
                   {"branch", r.branch},
                   {"receiver", r.receiver},
                   {"distance_m", r.distance_m},
                   {"target_ber", r.target_ber},
                   {"achievable_rate_hz", r.rate.bit_rate_hz},
                   {"rate_status", rate_status_name(r.rate.status)}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepParameter { kPower, kRate, kBackground };

struct SweepRow {
  SweepParameter parameter;
  double value = 0.0;
  ReportRow row;
};

inline std::string sweep_parameter_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::kPower:
      return "power";
    case SweepParameter::kRate:
      return "rate";
    case SweepParameter::kBackground:
      return "background";
  }
  return "unknown";
}

/// `steps` evenly spaced values from `from` to `to` inclusive.
inline std::vector<double> linear_range(double from, double to, int steps) {
  if (steps < 0) throw DomainError("sweep steps must be >= 0");
  std::vector<double> out;
  for (int i = 0; i < steps; ++i) {
    out.push_back(steps == 1 ? from : from + (to - from) * i / (steps - 1));
  }
  return out;
}

/// Evaluates every assigned link for each value of the swept parameter.
///
/// Power sets every branch's optical power; rate sets the bit rate; background
/// sets the ambient optical power on each detector. Link assignment is fixed
/// from the unswept scenario.
inline std::vector<SweepRow> sweep(const Scenario& base, SweepParameter parameter,
                                   const std::vector<double>& values, double bit_rate_hz,
                                   double target_ber, unsigned workers = 0) {
  for (double v : values) {
    const bool ok = parameter == SweepParameter::kBackground ? v >= 0.0 : v > 0.0;
    if (!ok || !std::isfinite(v)) {
      throw DomainError("sweep value out of range for parameter '" +
                        sweep_parameter_name(parameter) + "'");
    }
  }
  std::vector<SweepRow> out;
  if (values.empty()) return out;
  const auto jobs = assigned_jobs(base);
  std::vector<ImpulseResponse> shared;
  if (parameter != SweepParameter::kPower) shared = link_channels(base, jobs, workers);

  for (double v : values) {
    Scenario s = base;
    double rate = bit_rate_hz;
    std::vector<ImpulseResponse> irs;
    switch (parameter) {
      case SweepParameter::kPower:
        for (auto& adt : s.adts) {
          for (auto& br : adt.branches) br.power_w = v;
        }
        irs = link_channels(s, jobs, workers);
        break;
      case SweepParameter::kRate:
        rate = v;
        break;
      case SweepParameter::kBackground:
        s.noise.background_power_w = v;
        break;
    }
    const auto& channels = parameter == SweepParameter::kPower ? irs : shared;
    std::vector<ReportRow> rows(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
      rows[i] = make_row(s, jobs[i], channels[i], rate, target_ber);
    }, workers);
    for (auto& r : rows) out.push_back({parameter, v, std::move(r)});
  }
  return out;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "parameter,value,adt,branch,receiver,bit_rate_hz,ps1_w,snr_db,ber,achievable_rate_hz,"
        "rate_status\n";
  for (const auto& s : rows) {
    const auto& r = s.row;
    os << sweep_parameter_name(s.parameter) << ',' << format_float(s.value) << ',' << r.adt << ','
       << r.branch << ',' << r.receiver << ',' << format_float(r.budget.bit_rate_hz) << ','
       << format_float(r.budget.ps1_w) << ',' << format_float(r.budget.snr_db) << ','
       << format_float(r.budget.ber) << ',' << format_float(r.rate.bit_rate_hz) << ','
       << rate_status_name(r.rate.status) << '\n';
  }
}

inline nlohmann::json sweep_rows_to_json(const std::vector<SweepRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : rows) {
    const auto& r = s.row;
    out.push_back({{"parameter", sweep_parameter_name(s.parameter)},
                   {"value", s.value},
                   {"adt", r.adt},
                   {"branch", r.branch},
                   {"receiver", r.receiver},
                   {"bit_rate_hz", r.budget.bit_rate_hz},
                   {"ps1_w", r.budget.ps1_w},
                   {"snr_db", r.budget.snr_db},
                   {"ber", r.budget.ber},
                   {"achievable_rate_hz", r.rate.bit_rate_hz},
                   {"rate_status", rate_status_name(r.rate.status)}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Impulse response dump

inline void write_ir_csv(std::ostream& os, const ImpulseResponse& ir, const std::string& adt,
                         std::size_t branch, const std::string& receiver, int max_reflections) {
  os << "# adt=" << adt << " branch=" << branch << " receiver=" << receiver
     << " bin_width_s=" << format_float(ir.bin_width_s) << " max_reflections=" << max_reflections
     << " total_power_w=" << format_float(channel_total_power(ir)) << '\n';
  os << "time_s,power_w\n";
  for (std::size_t i = 0; i < ir.bins.size(); ++i) {
    os << format_float(ir.bin_time(i)) << ',' << format_float(ir.bins[i]) << '\n';
  }
}

inline nlohmann::json ir_to_json(const ImpulseResponse& ir, const std::string& adt,
                                 std::size_t branch, const std::string& receiver,
                                 int max_reflections) {
  nlohmann::json j;
  j["adt"] = adt;
  j["branch"] = branch;
  j["receiver"] = receiver;
  j["bin_width_s"] = ir.bin_width_s;
  j["start_time_s"] = ir.start_time_s;
  j["max_reflections"] = max_reflections;
  j["total_power_w"] = channel_total_power(ir);
  j["los_power_w"] = ir.los_power_w;
  j["los_delay_s"] = ir.los_delay_s ? nlohmann::json(*ir.los_delay_s) : nlohmann::json(nullptr);
  j["bins_w"] = ir.bins;
  return j;
}

}  // namespace owdc
