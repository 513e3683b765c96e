#pragma once

// Command-line front end: configuration (flags > JSON file > BEAMFORGE_SEED >
// defaults), the six commands, and CSV emission.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "beamforge/acceptance.hpp"
#include "beamforge/beampattern.hpp"
#include "beamforge/core_model.hpp"
#include "beamforge/sep.hpp"
#include "beamforge/stochastic.hpp"

namespace beamforge::cli {

enum class Command { Beampattern, SepAnalytic, SepMc, SepSweep, Atau, Validate };

inline const std::vector<std::pair<std::string, Command>>& command_names() {
  static const std::vector<std::pair<std::string, Command>> names{
      {"beampattern", Command::Beampattern}, {"sep-analytic", Command::SepAnalytic}, {"sep-mc", Command::SepMc},
      {"sep-sweep", Command::SepSweep},     {"atau", Command::Atau},                 {"validate", Command::Validate}};
  return names;
}

inline std::string to_string(Command c) {
  for (const auto& [name, cmd] : command_names())
    if (cmd == c) return name;
  return "?";
}

/// Invalid configuration; field names the offending setting.
struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string f, const std::string& msg) : std::runtime_error(f + ": " + msg), field(std::move(f)) {}
};

inline Command parse_command(const std::string& s) {
  for (const auto& [name, cmd] : command_names())
    if (name == s) return cmd;
  throw ConfigError("command", "unknown command '" + s + "'");
}

// Error model as configured: ratios and dB, converted against the system
// parameters only when the run starts.
struct ModelSpec {
  std::string kind = "perfect";  // perfect | channel | closed-loop | open-loop
  double sigma_delta_ratio = 0.01;
  double rho_tau_db = 10.0;
  double r_max_ratio = 0.1;
  double psi_max_ratio = 0.02;
};

inline const std::vector<std::string> model_kinds{"perfect", "channel", "closed-loop", "open-loop"};

struct Sweep {
  std::string axis;
  std::vector<double> values;
};

// Sweep axes and the model kind each one requires ("" means any).
inline const std::vector<std::pair<std::string, std::string>> sweep_axes{{"sigma_delta_ratio", "channel"},
                                                                         {"rho_tau_db", "closed-loop"},
                                                                         {"r_max_ratio", "open-loop"},
                                                                         {"psi_max_ratio", "open-loop"},
                                                                         {"N", ""}};

struct RunConfig {
  Command command = Command::SepMc;
  SystemParams params;  // noise powers derived from gamma1/gamma2 by finalize
  double gamma1_db = 20.0;
  double gamma2_db = 20.0;
  std::optional<double> mu_m;  // 1/N unless given
  double dest_angle_deg = 0.0;
  ModelSpec error_model;
  std::optional<Sweep> sweep;
  std::int64_t trials = 10'000;
  std::uint64_t master_seed = 0;
  std::string output_path;  // empty: stdout
  unsigned threads = 0;
  int grid_points = 361;
  bool delta = false;  // beampattern: perfect vs channel-error comparison
  std::int64_t phasor_samples = 10'000'000;
  std::vector<int> criteria;  // validate: subset to run
};

inline Sweep parse_sweep(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos || colon == 0) throw ConfigError("sweep", "expected axis:v1,v2,...");
  Sweep s{text.substr(0, colon), {}};
  std::stringstream rest(text.substr(colon + 1));
  std::string item;
  while (std::getline(rest, item, ',')) {
    try {
      std::size_t used = 0;
      s.values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("sweep", "'" + item + "' is not a number");
    }
  }
  return s;
}

/// Applies the system parameters that depend on several settings and checks
/// every cross-field rule. A sweep point has its sweep already applied.
inline RunConfig finalize(RunConfig c, bool sweep_point = false) {
  auto& p = c.params;
  p.mu_m = c.mu_m.value_or(p.N > 0 ? 1.0 / p.N : 1.0);
  p.dest_angle = c.dest_angle_deg * std::numbers::pi / 180.0;
  try {
    p = derive_powers(c.gamma1_db, c.gamma2_db, p);
    p.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("params", e.what());
  }
  const auto& m = c.error_model;
  if (std::find(model_kinds.begin(), model_kinds.end(), m.kind) == model_kinds.end())
    throw ConfigError("error_model", "unknown kind '" + m.kind + "'");
  if (c.trials < 1) throw ConfigError("trials", "must be >= 1");
  if (c.grid_points < 1) throw ConfigError("grid_points", "must be >= 1");
  if (c.phasor_samples < 2) throw ConfigError("phasor_samples", "must be >= 2");
  if (c.sweep) {
    const auto it = std::find_if(sweep_axes.begin(), sweep_axes.end(),
                                 [&](const auto& a) { return a.first == c.sweep->axis; });
    if (it == sweep_axes.end()) throw ConfigError("sweep", "unknown axis '" + c.sweep->axis + "'");
    if (!it->second.empty() && it->second != m.kind)
      throw ConfigError("sweep", "axis " + c.sweep->axis + " requires error model " + it->second + ", got " + m.kind);
    if (c.sweep->values.empty()) throw ConfigError("sweep", "no values");
    if (c.command == Command::Beampattern || c.command == Command::Validate)
      throw ConfigError("sweep", "not supported by command " + to_string(c.command));
  }
  if (c.command == Command::SepSweep && !c.sweep && !sweep_point) throw ConfigError("sweep", "sep-sweep needs --sweep");
  if (c.command == Command::Atau && m.kind != "closed-loop" && m.kind != "open-loop")
    throw ConfigError("error_model", "atau needs a phase error model");
  if (c.delta && (c.command != Command::Beampattern || m.kind != "channel"))
    throw ConfigError("delta", "only for beampattern with the channel error model");
  return c;
}

// ---------------------------------------------------------------------------
// JSON config file

namespace detail {

template <class T>
T json_get(const nlohmann::json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(field, "wrong type in config file");
  }
}

inline void apply_json(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config", "top level must be an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "command") {
      c.command = parse_command(json_get<std::string>(v, key));
    } else if (key == "params") {
      if (!v.is_object()) throw ConfigError("params", "must be an object");
      for (const auto& [pk, pv] : v.items()) {
        const std::string f = "params." + pk;
        if (pk == "N") c.params.N = json_get<int>(pv, f);
        else if (pk == "K") c.params.K = json_get<int>(pv, f);
        else if (pk == "M") c.params.M = json_get<int>(pv, f);
        else if (pk == "L") c.params.L = json_get<int>(pv, f);
        else if (pk == "gamma1_dB") c.gamma1_db = json_get<double>(pv, f);
        else if (pk == "gamma2_dB") c.gamma2_db = json_get<double>(pv, f);
        else if (pk == "R_over_lambda") c.params.R_over_lambda = json_get<double>(pv, f);
        else if (pk == "mu_m") c.mu_m = json_get<double>(pv, f);
        else if (pk == "b_m") c.params.b_m = json_get<double>(pv, f);
        else if (pk == "sigma_s_sq") c.params.sigma_s_sq = json_get<double>(pv, f);
        else if (pk == "sigma_a_sq") c.params.sigma_a_sq = json_get<double>(pv, f);
        else if (pk == "target") c.params.target = json_get<int>(pv, f);
        else if (pk == "dest_angle_deg") c.dest_angle_deg = json_get<double>(pv, f);
        else throw ConfigError(f, "unknown field");
      }
    } else if (key == "error_model") {
      if (v.is_string()) {
        c.error_model.kind = v.get<std::string>();
        continue;
      }
      if (!v.is_object()) throw ConfigError("error_model", "must be a string or an object");
      for (const auto& [mk, mv] : v.items()) {
        const std::string f = "error_model." + mk;
        if (mk == "kind") c.error_model.kind = json_get<std::string>(mv, f);
        else if (mk == "sigma_delta_ratio") c.error_model.sigma_delta_ratio = json_get<double>(mv, f);
        else if (mk == "rho_tau_db") c.error_model.rho_tau_db = json_get<double>(mv, f);
        else if (mk == "r_max_ratio") c.error_model.r_max_ratio = json_get<double>(mv, f);
        else if (mk == "psi_max_ratio") c.error_model.psi_max_ratio = json_get<double>(mv, f);
        else throw ConfigError(f, "unknown field");
      }
    } else if (key == "sweep") {
      if (v.is_string()) {
        c.sweep = parse_sweep(v.get<std::string>());
      } else if (v.is_object() && v.contains("axis") && v.contains("values")) {
        c.sweep = Sweep{json_get<std::string>(v["axis"], "sweep.axis"),
                        json_get<std::vector<double>>(v["values"], "sweep.values")};
      } else {
        throw ConfigError("sweep", "expected \"axis:v1,...\" or {\"axis\", \"values\"}");
      }
    } else if (key == "trials") {
      c.trials = json_get<std::int64_t>(v, key);
    } else if (key == "master_seed") {
      c.master_seed = json_get<std::uint64_t>(v, key);
    } else if (key == "output_path") {
      c.output_path = json_get<std::string>(v, key);
    } else if (key == "threads") {
      c.threads = json_get<unsigned>(v, key);
    } else if (key == "grid_points") {
      c.grid_points = json_get<int>(v, key);
    } else if (key == "phasor_samples") {
      c.phasor_samples = json_get<std::int64_t>(v, key);
    } else {
      throw ConfigError(key, "unknown field in config file");
    }
  }
}

}  // namespace detail

inline void load_config_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  detail::apply_json(c, j);
}

// ---------------------------------------------------------------------------
// Flags

struct HelpRequested {
  std::string text;
};

/// Builds a validated RunConfig from argv (args excludes the program name).
/// Throws ConfigError on anything invalid and HelpRequested for --help.
inline RunConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"beamforge: collaborative beamforming simulator"};
  app.name("beamforge");
  app.set_help_flag("-h,--help");

  std::string command, config_path, model, sweep, out, criteria;
  int n = 0, k = 0, m = 0, l = 0, grid = 0;
  double g1 = 0, g2 = 0, r_over = 0, sd = 0, rho = 0, rmax = 0, psimax = 0, dest = 0, mu = 0;
  std::int64_t trials = 0, phasor = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool delta = false;

  auto* o_command = app.add_option("--command", command, "beampattern|sep-analytic|sep-mc|sep-sweep|atau|validate");
  auto* o_config = app.add_option("--config", config_path, "JSON config file");
  auto* o_n = app.add_option("--n", n, "collaborating nodes N");
  auto* o_k = app.add_option("--k", k, "sources K");
  auto* o_m = app.add_option("--m", m, "PSK order M");
  auto* o_l = app.add_option("--l", l, "symbols per packet L");
  auto* o_g1 = app.add_option("--gamma1-db", g1, "source-to-collaborator SNR");
  auto* o_g2 = app.add_option("--gamma2-db", g2, "collaborator-to-destination SNR");
  auto* o_r = app.add_option("--r-over-lambda", r_over, "disk radius in wavelengths");
  auto* o_mu = app.add_option("--mu", mu, "amplification mu_m (default 1/N)");
  auto* o_dest = app.add_option("--dest-angle-deg", dest, "destination azimuth");
  auto* o_model = app.add_option("--error-model", model, "perfect|channel|closed-loop|open-loop");
  auto* o_sd = app.add_option("--sigma-delta-ratio", sd, "sigma_delta^2 / sigma_a^2");
  auto* o_rho = app.add_option("--rho-tau-db", rho, "Tikhonov loop SNR");
  auto* o_rmax = app.add_option("--r-max-ratio", rmax, "r_max / R");
  auto* o_psi = app.add_option("--psi-max-ratio", psimax, "psi_max / 2pi");
  auto* o_sweep = app.add_option("--sweep", sweep, "axis:v1,v2,...");
  auto* o_trials = app.add_option("--trials", trials, "Monte Carlo trials");
  auto* o_seed = app.add_option("--seed", seed, "master seed");
  auto* o_threads = app.add_option("--threads", threads, "worker cap (0: all cores)");
  auto* o_out = app.add_option("--out", out, "CSV path (default stdout)");
  auto* o_grid = app.add_option("--grid-points", grid, "beampattern angles over [-180, 180] deg");
  auto* o_delta = app.add_flag("--delta", delta, "beampattern: perfect vs channel-error difference");
  auto* o_phasor = app.add_option("--phasor-samples", phasor, "open-loop mean phasor samples");
  auto* o_criteria = app.add_option("--criteria", criteria, "validate: comma-separated criterion ids");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& e) {
    std::string field = "arguments";
    const std::string what = e.what();
    for (const auto& a : args)
      if (a.rfind("--", 0) == 0 && what.find(a.substr(0, a.find('='))) != std::string::npos) {
        field = a.substr(0, a.find('='));
        break;
      }
    throw ConfigError(field, what);
  }

  RunConfig c;
  if (const char* env = std::getenv("BEAMFORGE_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      c.master_seed = std::stoull(env, &used, 0);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw ConfigError("BEAMFORGE_SEED", std::string("not an unsigned integer: ") + env);
    }
  }
  if (*o_config) load_config_file(c, config_path);

  if (*o_command) c.command = parse_command(command);
  if (*o_n) c.params.N = n;
  if (*o_k) c.params.K = k;
  if (*o_m) c.params.M = m;
  if (*o_l) c.params.L = l;
  if (*o_g1) c.gamma1_db = g1;
  if (*o_g2) c.gamma2_db = g2;
  if (*o_r) c.params.R_over_lambda = r_over;
  if (*o_mu) c.mu_m = mu;
  if (*o_dest) c.dest_angle_deg = dest;
  if (*o_model) c.error_model.kind = model;
  if (*o_sd) c.error_model.sigma_delta_ratio = sd;
  if (*o_rho) c.error_model.rho_tau_db = rho;
  if (*o_rmax) c.error_model.r_max_ratio = rmax;
  if (*o_psi) c.error_model.psi_max_ratio = psimax;
  if (*o_sweep) c.sweep = parse_sweep(sweep);
  if (*o_trials) c.trials = trials;
  if (*o_seed) c.master_seed = seed;
  if (*o_threads) c.threads = threads;
  if (*o_out) c.output_path = out;
  if (*o_grid) c.grid_points = grid;
  if (*o_delta) c.delta = delta;
  if (*o_phasor) c.phasor_samples = phasor;
  if (*o_criteria) {
    std::stringstream ss(criteria);
    std::string item;
    while (std::getline(ss, item, ',')) {
      int id = 0;
      try {
        id = std::stoi(item);
      } catch (const std::exception&) {
        throw ConfigError("criteria", "'" + item + "' is not an integer");
      }
      if (id < 1 || id > 9) throw ConfigError("criteria", "ids are 1..9");
      c.criteria.push_back(id);
    }
  }

  // A model parameter flag for a different model is a mistake, not a no-op.
  const std::pair<CLI::Option*, const char*> owned[]{
      {o_sd, "channel"}, {o_rho, "closed-loop"}, {o_rmax, "open-loop"}, {o_psi, "open-loop"}};
  for (const auto& [opt, kind] : owned)
    if (*opt && c.error_model.kind != kind)
      throw ConfigError(opt->get_name(), std::string("requires --error-model ") + kind);

  return finalize(std::move(c));
}

// ---------------------------------------------------------------------------
// Running

inline ErrorModel to_error_model(const ModelSpec& m, const SystemParams& p) {
  if (m.kind == "channel") return ChannelError{m.sigma_delta_ratio * p.sigma_a_sq};
  if (m.kind == "closed-loop") return ClosedLoopPhase{db_to_linear(m.rho_tau_db)};
  if (m.kind == "open-loop") return OpenLoopPhase{m.r_max_ratio * p.R_over_lambda, m.psi_max_ratio * two_pi};
  return Perfect{};
}

/// Round-trip CSV formatting.
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(std::ostream& os) : os_(os) {}
  void header(const std::vector<std::string>& cols) { row_strings(cols); }
  void row(const std::vector<std::string>& cells) { row_strings(cells); }

 private:
  void row_strings(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
  }
  std::ostream& os_;
};

namespace detail {

// Config for one point of a sweep.
inline RunConfig at_point(const RunConfig& base, double v) {
  RunConfig c = base;
  const auto& axis = base.sweep->axis;
  if (axis == "sigma_delta_ratio") c.error_model.sigma_delta_ratio = v;
  else if (axis == "rho_tau_db") c.error_model.rho_tau_db = v;
  else if (axis == "r_max_ratio") c.error_model.r_max_ratio = v;
  else if (axis == "psi_max_ratio") c.error_model.psi_max_ratio = v;
  else if (axis == "N") {
    if (v != std::floor(v) || v < 1) throw ConfigError("sweep", "N values must be positive integers");
    c.params.N = int(v);
  }
  c.sweep.reset();
  return finalize(c, true);
}

inline MeanPhasorOptions phasor_options(const RunConfig& c) { return {c.phasor_samples, c.master_seed, c.threads}; }

inline double analytic_sep(const RunConfig& c) {
  const auto model = to_error_model(c.error_model, c.params);
  return sep_analytic(c.params, sinr_map_for(c.params, model, phasor_options(c)));
}

}  // namespace detail

/// Executes a finalized config, writing CSV to out and the summary line to
/// log. Returns the process exit code.
inline int run(const RunConfig& c, std::ostream& out, std::ostream& log) {
  Csv csv(out);
  const auto& p = c.params;
  std::vector<double> points;
  if (c.sweep) points = c.sweep->values;
  const bool swept = c.sweep.has_value();
  const std::string axis = swept ? c.sweep->axis : "";
  auto lead = [&](double v) { return swept ? std::vector<std::string>{fmt(v)} : std::vector<std::string>{}; };
  auto with_axis = [&](std::vector<std::string> cols) {
    if (swept) cols.insert(cols.begin(), axis);
    return cols;
  };
  auto each_point = [&](auto&& fn) {
    if (!swept) return fn(c, 0.0);
    for (double v : points) fn(detail::at_point(c, v), v);
  };

  switch (c.command) {
    case Command::Beampattern: {
      const auto grid = uniform_grid(p.dest_angle - std::numbers::pi, p.dest_angle + std::numbers::pi, c.grid_points);
      const BeampatternOptions bo{false, c.threads};
      if (c.delta) {
        const double sd = c.error_model.sigma_delta_ratio * p.sigma_a_sq;
        const auto cmp = mc_beampattern_comparison(p, {sd}, grid, c.trials, c.master_seed, bo).front();
        const double lift = delta_pav_analytic(p, sd);
        csv.header({"phi_rad", "perfect", "perfect_stderr", "imperfect", "imperfect_stderr", "difference",
                    "difference_stderr", "difference_analytic"});
        for (std::size_t k = 0; k < grid.size(); ++k)
          csv.row({fmt(grid[k]), fmt(cmp.perfect.power[k]), fmt(cmp.perfect.stderr_[k]), fmt(cmp.imperfect.power[k]),
                   fmt(cmp.imperfect.stderr_[k]), fmt(cmp.difference.power[k]), fmt(cmp.difference.stderr_[k]),
                   fmt(lift)});
        log << "beampattern: " << grid.size() << " angles, " << c.trials << " trials, analytic lift " << lift << "\n";
      } else {
        const auto curve = mc_beampattern(p, to_error_model(c.error_model, p), grid, c.trials, c.master_seed, bo);
        csv.header({"phi_rad", "power", "stderr"});
        for (std::size_t k = 0; k < grid.size(); ++k)
          csv.row({fmt(grid[k]), fmt(curve.power[k]), fmt(curve.stderr_[k])});
        const auto peak = std::max_element(curve.power.begin(), curve.power.end()) - curve.power.begin();
        log << "beampattern: " << grid.size() << " angles, " << c.trials << " trials, peak " << curve.power[peak]
            << " at " << grid[peak] << " rad\n";
      }
      return 0;
    }
    case Command::SepAnalytic: {
      csv.header(with_axis({"sep_analytic"}));
      int rows = 0;
      each_point([&](const RunConfig& pc, double v) {
        auto row = lead(v);
        row.push_back(fmt(detail::analytic_sep(pc)));
        csv.row(row);
        ++rows;
      });
      log << "sep-analytic: " << rows << " point(s), model " << c.error_model.kind << "\n";
      return 0;
    }
    case Command::SepMc: {
      csv.header(with_axis({"sep_mc", "sep_mc_stderr", "trials"}));
      int rows = 0;
      each_point([&](const RunConfig& pc, double v) {
        const auto est = mc_sep(pc.params, to_error_model(pc.error_model, pc.params), pc.trials, pc.master_seed,
                                pc.threads);
        auto row = lead(v);
        row.insert(row.end(), {fmt(est.sep), fmt(est.stderr_), std::to_string(pc.trials)});
        csv.row(row);
        ++rows;
      });
      log << "sep-mc: " << rows << " point(s), " << c.trials << " trials each, model " << c.error_model.kind << "\n";
      return 0;
    }
    case Command::SepSweep: {
      csv.header({axis, "sep_analytic", "sep_mc", "sep_mc_stderr", "trials"});
      int rows = 0;
      each_point([&](const RunConfig& pc, double v) {
        const double a = detail::analytic_sep(pc);
        const auto est = mc_sep(pc.params, to_error_model(pc.error_model, pc.params), pc.trials, pc.master_seed,
                                pc.threads);
        csv.row({fmt(v), fmt(a), fmt(est.sep), fmt(est.stderr_), std::to_string(pc.trials)});
        ++rows;
      });
      log << "sep-sweep: " << rows << " points along " << axis << ", " << c.trials << " trials each\n";
      return 0;
    }
    case Command::Atau: {
      csv.header(with_axis({"mean_phasor_sq", "mean_phasor_stderr", "a_tau"}));
      int rows = 0;
      each_point([&](const RunConfig& pc, double v) {
        const auto mp = mean_phasor(pc.params, to_error_model(pc.error_model, pc.params), detail::phasor_options(pc));
        auto row = lead(v);
        row.insert(row.end(), {fmt(mp.value), fmt(mp.stderr_), fmt(power_reduction_coefficient(pc.params.N, mp.value))});
        csv.row(row);
        ++rows;
      });
      log << "atau: " << rows << " point(s), model " << c.error_model.kind << "\n";
      return 0;
    }
    case Command::Validate: {
      acceptance::Options ao{c.master_seed, c.threads, c.criteria};
      const auto results = acceptance::run_acceptance(ao, log);
      csv.header({"criterion", "passed", "seconds"});
      int failed = 0;
      for (const auto& r : results) {
        csv.row({std::to_string(r.id), r.passed ? "1" : "0", fmt(r.seconds)});
        failed += !r.passed;
      }
      log << "validate: " << results.size() - failed << "/" << results.size() << " criteria passed\n";
      return failed ? 1 : 0;
    }
  }
  return 0;
}

/// Whole program: parse, run, map failures to exit codes
/// (0 ok, 1 numeric failure or unwritable output, 2 configuration error).
inline int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  try {
    c = parse_config(args);
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const ConfigError& e) {
    err << "beamforge: configuration error in " << e.field << ": " << e.what() << "\n";
    return 2;
  }

  std::ofstream file;
  std::ostringstream buffer;
  if (!c.output_path.empty()) {
    file.open(c.output_path, std::ios::binary);
    if (!file) {
      err << "beamforge: cannot write " << c.output_path << "\n";
      return 1;
    }
  }
  try {
    const int code = run(c, buffer, c.output_path.empty() ? err : out);
    auto& sink = c.output_path.empty() ? out : static_cast<std::ostream&>(file);
    sink << buffer.str();
    sink.flush();
    if (!sink) {
      err << "beamforge: write failed for " << (c.output_path.empty() ? "stdout" : c.output_path) << "\n";
      return 1;
    }
    return code;
  } catch (const ConfigError& e) {
    err << "beamforge: configuration error in " << e.field << ": " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    err << "beamforge: numeric failure: " << e.what() << "\n";
    return 1;
  } catch (const ParameterError& e) {
    err << "beamforge: configuration error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace beamforge::cli
