// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "owdc/errors.hpp"
#include "owdc/report.hpp"
#include "owdc/scenario.hpp"
#include "owdc/scenario_json.hpp"

// Command-line front end. Values from a scenario file are the baseline;
// explicit flags override them.

namespace owdc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitResource = 3;

struct Options {
  std::string builtin;
  std::string scenario_path;
  std::string aim;
  std::optional<int> reflections;
  std::optional<double> element_size;
  std::optional<double> bin_width;
  std::string out_path;
  std::string format = "csv";
  double rate = 2.8e9;
  double target_ber = 1e-9;
  // sweep
  std::string param;
  double from = 0.0;
  double to = 0.0;
  int steps = 0;
  // ir
  std::string adt;
  std::size_t branch = 0;
  std::string receiver;
  unsigned threads = 0;  // 0: hardware concurrency
};

class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Builds the scenario from --builtin/--scenario and applies flag overrides.
inline Scenario load(const Options& o) {
  Scenario s;
  if (!o.builtin.empty() && !o.scenario_path.empty()) {
    throw InputError("--builtin and --scenario are mutually exclusive");
  }
  if (!o.scenario_path.empty()) {
    if (!o.aim.empty()) throw InputError("--aim only applies to --builtin scenarios");
    s = load_scenario_file(o.scenario_path);
  } else {
    if (!o.builtin.empty() && o.builtin != "paper") {
      throw InputError("unknown builtin scenario '" + o.builtin + "'");
    }
    AimMode mode = AimMode::kPaperAngles;
    if (o.aim == "exact") {
      mode = AimMode::kExact;
    } else if (!o.aim.empty() && o.aim != "paper") {
      throw InputError("--aim must be 'exact' or 'paper'");
    }
    s = paper_scenario(mode);
  }
  if (o.reflections) s.sim.max_reflections = *o.reflections;
  if (o.element_size) s.sim.element_size_m = *o.element_size;
  if (o.bin_width) s.sim.bin_width_s = *o.bin_width;
  return s;
}

inline void require_valid(const Scenario& s, std::optional<double> rate, std::ostream& err) {
  const auto findings = validate(s, rate);
  for (const auto& f : findings) {
    if (f.severity == Severity::kError) err << to_string(f) << '\n';
  }
  if (has_errors(findings)) throw InputError("scenario failed validation");
}

inline void emit(const Options& o, const std::string& text, std::ostream& out) {
  if (o.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out_path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + o.out_path + "'");
  f << text;
}

inline void check_format(const Options& o) {
  if (o.format != "csv" && o.format != "json") throw InputError("--format must be csv or json");
}

inline int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
  check_format(o);
  const Scenario s = load(o);
  require_valid(s, o.rate, err);
  const auto rows = evaluate_scenario(s, o.rate, o.target_ber, o.threads);
  std::ostringstream text;
  if (o.format == "json") {
    text << run_rows_to_json(rows).dump(2) << '\n';
  } else {
    write_run_csv(text, rows);
  }
  emit(o, text.str(), out);
  return kExitOk;
}

inline int cmd_rates(const Options& o, std::ostream& out, std::ostream& err) {
  check_format(o);
  const Scenario s = load(o);
  require_valid(s, std::nullopt, err);
  const auto rows = evaluate_scenario(s, s.noise.ceiling_rate(), o.target_ber, o.threads);
  std::ostringstream text;
  if (o.format == "json") {
    text << rates_rows_to_json(rows).dump(2) << '\n';
  } else {
    write_rates_csv(text, rows);
  }
  emit(o, text.str(), out);
  return kExitOk;
}

inline int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  check_format(o);
  SweepParameter p;
  if (o.param == "power") {
    p = SweepParameter::kPower;
  } else if (o.param == "rate") {
    p = SweepParameter::kRate;
  } else if (o.param == "background") {
    p = SweepParameter::kBackground;
  } else {
    throw InputError("unknown sweep parameter '" + o.param + "' (power, rate, background)");
  }
  const Scenario s = load(o);
  require_valid(s, p == SweepParameter::kRate ? std::nullopt : std::optional<double>(o.rate), err);
  const auto rows = sweep(s, p, linear_range(o.from, o.to, o.steps), o.rate, o.target_ber, o.threads);
  std::ostringstream text;
  if (o.format == "json") {
    text << sweep_rows_to_json(rows).dump(2) << '\n';
  } else {
    write_sweep_csv(text, rows);
  }
  emit(o, text.str(), out);
  return kExitOk;
}

inline int cmd_ir(const Options& o, std::ostream& out, std::ostream& err) {
  check_format(o);
  const Scenario s = load(o);
  require_valid(s, std::nullopt, err);
  std::optional<std::size_t> adt;
  for (std::size_t i = 0; i < s.adts.size(); ++i) {
    if (s.adts[i].name == o.adt) adt = i;
  }
  if (!adt) throw InputError("unknown adt '" + o.adt + "'");
  if (o.branch >= s.adts[*adt].branches.size()) {
    throw InputError("adt '" + o.adt + "' has no branch " + std::to_string(o.branch));
  }
  std::optional<std::size_t> rx;
  for (std::size_t i = 0; i < s.receivers.size(); ++i) {
    if (s.receivers[i].name == o.receiver) rx = i;
  }
  if (!rx) throw InputError("unknown receiver '" + o.receiver + "'");

  const ImpulseResponse ir = impulse_response(s.environment(), s.adts[*adt].branches[o.branch],
                                              s.receivers[*rx], s.sim);
  std::ostringstream text;
  if (o.format == "json") {
    text << ir_to_json(ir, o.adt, o.branch, o.receiver, s.sim.max_reflections).dump(2) << '\n';
  } else {
    write_ir_csv(text, ir, o.adt, o.branch, o.receiver, s.sim.max_reflections);
  }
  emit(o, text.str(), out);
  return kExitOk;
}

inline int cmd_paper(const Options& o, std::ostream& out, std::ostream&) {
  Options p = o;
  p.builtin = "paper";
  p.scenario_path.clear();
  emit(o, serialize_scenario(load(p)), out);
  return kExitOk;
}

inline int cmd_validate(const Options& o, std::ostream& out, std::ostream&) {
  const Scenario s = load(o);
  const auto findings = validate(s, std::nullopt);
  std::ostringstream text;
  for (const auto& f : findings) text << to_string(f) << '\n';
  for (const auto& w : assign_links(s).warnings) text << "warning: " << w << '\n';
  if (findings.empty()) text << "ok\n";
  emit(o, text.str(), out);
  return has_errors(findings) ? kExitInput : kExitOk;
}

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optical wireless data-center uplink simulator", "owdc"};
  app.require_subcommand(1);
  Options o;

  auto add_scene = [&](CLI::App* c) {
    c->add_option("--builtin", o.builtin, "Built-in scenario (paper)");
    c->add_option("--scenario", o.scenario_path, "Scenario JSON file");
    c->add_option("--aim", o.aim, "Aim mode for the built-in scenario: exact|paper");
    c->add_option("--reflections", o.reflections, "Maximum reflection order");
    c->add_option("--element-size", o.element_size, "Surface element size (m)");
    c->add_option("--bin-width", o.bin_width, "Impulse response bin width (s)");
    c->add_option("--out", o.out_path, "Write output to this file");
    c->add_option("--format", o.format, "csv|json");
    c->add_option("--threads", o.threads, "Worker threads (0: one per core)");
  };

  auto* run_cmd = app.add_subcommand("run", "Per-link budget table at one bit rate");
  add_scene(run_cmd);
  run_cmd->add_option("--rate", o.rate, "Bit rate (Hz)");
  run_cmd->add_option("--target-ber", o.target_ber, "BER target for the achievable rate");

  auto* rates_cmd = app.add_subcommand("rates", "Achievable rate per link");
  add_scene(rates_cmd);
  rates_cmd->add_option("--target-ber", o.target_ber, "BER target");

  auto* sweep_cmd = app.add_subcommand("sweep", "Parameter sweep in long format");
  add_scene(sweep_cmd);
  sweep_cmd->add_option("--param", o.param, "power|rate|background")->required();
  sweep_cmd->add_option("--from", o.from, "First value");
  sweep_cmd->add_option("--to", o.to, "Last value");
  sweep_cmd->add_option("--steps", o.steps, "Number of values (0 gives an empty table)");
  sweep_cmd->add_option("--rate", o.rate, "Bit rate (Hz) for power/background sweeps");
  sweep_cmd->add_option("--target-ber", o.target_ber, "BER target");

  auto* ir_cmd = app.add_subcommand("ir", "Dump one channel impulse response");
  add_scene(ir_cmd);
  ir_cmd->add_option("--adt", o.adt, "Transmitter name")->required();
  ir_cmd->add_option("--branch", o.branch, "Branch index (0-based)")->required();
  ir_cmd->add_option("--receiver", o.receiver, "Receiver name")->required();

  auto* paper_cmd = app.add_subcommand("paper", "Export the built-in scenario as JSON");
  paper_cmd->add_option("--aim", o.aim, "exact|paper");
  paper_cmd->add_option("--out", o.out_path, "Output path");

  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario and list findings");
  add_scene(validate_cmd);

  std::vector<const char*> argv{"owdc"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  try {
    if (*run_cmd) return cmd_run(o, out, err);
    if (*rates_cmd) return cmd_rates(o, out, err);
    if (*sweep_cmd) return cmd_sweep(o, out, err);
    if (*ir_cmd) return cmd_ir(o, out, err);
    if (*paper_cmd) return cmd_paper(o, out, err);
    if (*validate_cmd) return cmd_validate(o, out, err);
  } catch (const ResourceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitResource;
  } catch (const std::exception& e) {
    // parse, validation, domain and input errors
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace owdc::cli
