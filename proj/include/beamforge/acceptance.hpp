#pragma once

// End-to-end validation suite: analytic results against the full-chain
// simulator, plus the oracle checks on the intermediate quantities. Every
// budget and tolerance is fixed here; run_acceptance prints one line per
// criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "beamforge/beampattern.hpp"
#include "beamforge/core_model.hpp"
#include "beamforge/parallel.hpp"
#include "beamforge/protocol.hpp"
#include "beamforge/sep.hpp"
#include "beamforge/stochastic.hpp"

namespace beamforge::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::vector<int> only;  // empty: all criteria
};

/// Standard error used when comparing an analytic SEP p_a with a Monte Carlo
/// estimate over n decisions: the larger of the plug-in binomial error and
/// the binomial error implied by p_a itself. The plug-in value is zero when
/// no errors are observed, which would make any p_a > 0 look inconsistent.
inline double comparison_stderr(const SepEstimate& mc, double analytic) {
  const double p = std::clamp(analytic, 0.0, 1.0);
  const double null_se = std::sqrt(p * (1.0 - p) / double(mc.decisions));
  return std::max(mc.stderr_, null_se);
}

inline bool agrees(const SepEstimate& mc, double analytic, double rel) {
  const double tol = std::max(3.0 * comparison_stderr(mc, analytic), rel * mc.sep);
  return std::abs(analytic - mc.sep) <= tol;
}

/// Monotonicity on Monte Carlo estimates: a decrease counts only when it
/// exceeds three standard errors of the difference.
inline bool drops(const SepEstimate& before, const SepEstimate& after) {
  return after.sep < before.sep - 3.0 * std::hypot(before.stderr_, after.stderr_);
}

inline std::string sci(double v) {
  std::ostringstream o;
  o << std::scientific << std::setprecision(3) << v;
  return o.str();
}

inline SystemParams operating_point(int N) { return derive_powers(20.0, 20.0, SystemParams::with_nodes(N)); }

// Trial count giving one million symbol decisions.
inline std::int64_t million_decisions(const SystemParams& p) { return (1'000'000 + p.L - 1) / p.L; }

inline std::string point_line(const std::string& label, double analytic, const SepEstimate& mc, bool ok) {
  std::ostringstream o;
  o << "    " << label << ": analytic=" << sci(analytic) << " mc=" << sci(mc.sep) << " (" << mc.errors << "/"
    << mc.decisions << ", se=" << sci(comparison_stderr(mc, analytic)) << ") " << (ok ? "ok" : "MISMATCH") << "\n";
  return o.str();
}

// 1. Perfect-condition analytic SEP against the simulator.
inline CriterionResult perfect_consistency(const Options& opt) {
  CriterionResult r{1, "perfect-condition SEP: analytic vs Monte Carlo (N=64)"};
  const auto start = std::chrono::steady_clock::now();
  const auto p = operating_point(64);
  const double a = sep_analytic(p, SinrMap::perfect(p));
  const auto mc = mc_sep(p, Perfect{}, million_decisions(p), opt.seed, opt.threads);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool close = std::abs(a - mc.sep) <= 3.0 * comparison_stderr(mc, a);
  r.passed = close && secs < 60.0;
  r.detail = point_line("N=64", a, mc, close) + "    runtime " + std::to_string(secs) + " s (limit 60 s)\n";
  return r;
}

// 2. SEP versus estimation-error variance.
inline CriterionResult channel_error_sweep(const Options& opt) {
  CriterionResult r{2, "channel-error SEP sweep: monotone MC, analytic within max(3se, 15%)"};
  const auto p = operating_point(100);
  std::ostringstream d;
  bool ok = true;
  std::optional<SepEstimate> prev;
  for (double ratio : {1e-3, 1e-2, 1e-1, 1.0}) {
    const double sd = ratio * p.sigma_a_sq;
    const double a = sep_analytic(p, SinrMap::channel_error(p, sd));
    const auto mc = mc_sep(p, ChannelError{sd}, million_decisions(p), opt.seed, opt.threads);
    const bool close = agrees(mc, a, 0.15);
    const bool mono = !prev || !drops(*prev, mc);
    prev = mc;
    ok = ok && close && mono;
    d << point_line("sigma_delta^2/sigma_a^2=" + sci(ratio), a, mc, close);
    if (!mono) d << "    MC decreased at this point\n";
  }
  r.passed = ok;
  r.detail = d.str();
  return r;
}

// 3. Closed-loop (Tikhonov) phase errors.
inline CriterionResult closed_loop_sweep(const Options& opt) {
  CriterionResult r{3, "closed-loop phase SEP sweep: analytic (A_tau) within max(3se, 20%), shape"};
  const auto p = operating_point(100);
  std::ostringstream d;
  bool ok = true;
  const std::vector<double> rho_db{0.0, 5.0, 10.0, 15.0, 20.0};
  std::vector<double> analytic;
  std::vector<SepEstimate> mcs;
  for (double db : rho_db) {
    const ClosedLoopPhase model{db_to_linear(db)};
    const double a_tau = power_reduction_coefficient(p.N, mean_phasor(p, model).value);
    const double a = sep_analytic(p, SinrMap::phase_approx(p, a_tau));
    const auto mc = mc_sep(p, model, million_decisions(p), opt.seed, opt.threads);
    const bool close = agrees(mc, a, 0.20);
    ok = ok && close;
    analytic.push_back(a);
    mcs.push_back(mc);
    d << point_line("rho_tau=" + std::to_string(int(db)) + " dB (A_tau=" + sci(a_tau) + ")", a, mc, close);
  }
  for (std::size_t k = 1; k < rho_db.size(); ++k) {
    if (!(analytic[k] < analytic[k - 1])) {
      ok = false;
      d << "    analytic SEP not strictly increasing as rho_tau decreases at " << rho_db[k] << " dB\n";
    }
    if (drops(mcs[k], mcs[k - 1])) {
      ok = false;
      d << "    MC SEP increases with rho_tau at " << rho_db[k] << " dB\n";
    }
  }
  const double a_perf = sep_analytic(p, SinrMap::perfect(p));
  const auto mc_perf = mc_sep(p, Perfect{}, million_decisions(p), opt.seed, opt.threads);
  const double a_rel = std::abs(analytic.back() - a_perf) / a_perf;
  const bool a_near = a_rel <= 0.10;
  const double mc_tol = std::max(0.10 * mc_perf.sep, 3.0 * std::hypot(comparison_stderr(mc_perf, a_perf),
                                                                     comparison_stderr(mcs.back(), analytic.back())));
  const bool mc_near = std::abs(mcs.back().sep - mc_perf.sep) <= mc_tol;
  ok = ok && a_near && mc_near;
  d << "    20 dB vs perfect phase: analytic " << sci(analytic.back()) << " vs " << sci(a_perf) << " (rel "
    << sci(a_rel) << ", limit 0.1) " << (a_near ? "ok" : "FAIL") << "; MC " << sci(mcs.back().sep) << " vs "
    << sci(mc_perf.sep) << " " << (mc_near ? "ok" : "FAIL") << "\n";
  r.passed = ok;
  r.detail = d.str();
  return r;
}

// 4. Open-loop (location error) phase errors.
inline CriterionResult open_loop_grid(const Options& opt) {
  CriterionResult r{4, "open-loop phase SEP grid: monotone MC, analytic (A_tau) within max(3se, 25%)"};
  auto p = operating_point(100);
  p.R_over_lambda = 10.0;
  std::ostringstream d;
  bool ok = true;
  const std::vector<double> r_ratio{0.0, 0.1, 0.3}, psi_ratio{0.0, 0.02, 0.05};
  std::vector<std::vector<SepEstimate>> mc_grid(3, std::vector<SepEstimate>(3));
  for (std::size_t i = 0; i < r_ratio.size(); ++i)
    for (std::size_t j = 0; j < psi_ratio.size(); ++j) {
      const OpenLoopPhase model{r_ratio[i] * p.R_over_lambda, psi_ratio[j] * two_pi};
      const auto mp = mean_phasor(p, model, {10'000'000, opt.seed, opt.threads});
      const double a_tau = power_reduction_coefficient(p.N, mp.value);
      const double a = sep_analytic(p, SinrMap::phase_approx(p, a_tau));
      const auto mc = mc_sep(p, model, million_decisions(p), opt.seed, opt.threads);
      const bool close = agrees(mc, a, 0.25);
      ok = ok && close;
      mc_grid[i][j] = mc;
      d << point_line("r_max/R=" + sci(r_ratio[i]) + " psi_max/2pi=" + sci(psi_ratio[j]) + " (|E|^2=" +
                          sci(mp.value) + ", A_tau=" + sci(a_tau) + ")",
                      a, mc, close);
    }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      if (i > 0 && drops(mc_grid[i - 1][j], mc_grid[i][j])) {
        ok = false;
        d << "    MC SEP decreases along r_max at (" << i << "," << j << ")\n";
      }
      if (j > 0 && drops(mc_grid[i][j - 1], mc_grid[i][j])) {
        ok = false;
        d << "    MC SEP decreases along psi_max at (" << i << "," << j << ")\n";
      }
    }
  r.passed = ok;
  r.detail = d.str();
  return r;
}

// 5. Beampattern lift from channel-estimation errors.
inline CriterionResult beampattern_lift(const Options& opt) {
  CriterionResult r{5, "beampattern: (imperfect - perfect) flat and equal to the analytic lift"};
  auto p = operating_point(100);
  p.L = 1;  // one symbol per trial: the cost is the per-angle steering, not the batch
  const double deg = std::numbers::pi / 180.0;
  const auto grid = uniform_grid(p.dest_angle - 90.0 * deg, p.dest_angle + 90.0 * deg, 181);
  const auto cmp = mc_beampattern_comparison(p, {0.01, 0.1}, grid, 100'000, opt.seed, {false, opt.threads});
  std::ostringstream d;
  bool ok = true;
  for (const auto& c : cmp) {
    const double target = delta_pav_analytic(p, c.sigma_delta_sq * p.sigma_a_sq);
    const auto& v = c.difference.power;
    const double lo = *std::min_element(v.begin(), v.end());
    const double hi = *std::max_element(v.begin(), v.end());
    const double max_se = *std::max_element(c.difference.stderr_.begin(), c.difference.stderr_.end());
    double worst = 0.0;
    for (double x : v) worst = std::max(worst, std::abs(x - target) / target);
    const bool flat = hi - lo <= 5.0 * max_se;
    const bool value = worst <= 0.05;
    ok = ok && flat && value;
    d << "    sigma_delta^2/sigma_a^2=" << sci(c.sigma_delta_sq) << ": analytic " << sci(target) << ", MC range ["
      << sci(lo) << ", " << sci(hi) << "], spread " << sci(hi - lo) << " vs 5*max se " << sci(5.0 * max_se)
      << (flat ? " ok" : " NOT FLAT") << ", worst rel dev " << sci(worst) << (value ? " ok" : " FAIL") << "\n";
  }
  r.passed = ok;
  r.detail = d.str();
  return r;
}

// 6. Interference variance given the target channel.
inline CriterionResult kappa_oracle(const Options& opt) {
  CriterionResult r{6, "kappa variance: empirical vs closed form within 2%"};
  auto p = derive_powers(20.0, 20.0, SystemParams::with_nodes(32));
  p.L = 1;
  const double sd = 0.1 * p.sigma_a_sq;
  const ChannelError model{sd};
  auto fixed_rng = seed_for_trial(opt.seed, 0, "kappa-target-channel");
  std::vector<cplx> a_m(p.N);
  fill_complex_gaussian(a_m, p.sigma_a_sq, fixed_rng);
  double xi = 0.0;
  for (auto a : a_m) xi += std::norm(a);

  const std::int64_t redraws = 1'000'000;
  auto parts = map_chunks(redraws, opt.threads, [&](std::int64_t begin, std::int64_t end) {
    RunningStats s;
    for (std::int64_t t = begin; t < end; ++t) {
      auto chan_rng = seed_for_trial(opt.seed + 1, std::uint64_t(t), "channel");
      auto ch = sample_channels(p, model, sample_disk_geometry(p, chan_rng), chan_rng);
      for (int i = 0; i < p.N; ++i) ch.gains(p.target, i) = a_m[i];
      auto sig_rng = seed_for_trial(opt.seed + 1, std::uint64_t(t), "signal");
      const auto pk = draw_symbols(p, sig_rng);
      const auto slot = share_slot(p, ch, pk, sig_rng);
      const auto y = beamform_and_receive(p, ch, slot, p.dest_angle, false);
      const cplx kappa = y[0] - p.mu_m * p.b_m * xi * pk.symbols(p.target, 0);
      s.add(std::norm(kappa));
    }
    return s;
  });
  RunningStats all;
  for (const auto& s : parts) all.merge(s);
  const double expected = kappa_variance(p, sd, xi);
  const double rel = std::abs(all.mean - expected) / expected;
  r.passed = rel <= 0.02;
  std::ostringstream d;
  d << "    N=" << p.N << " xi=" << sci(xi) << ": empirical " << sci(all.mean) << " +- " << sci(all.stderr_of_mean())
    << ", closed form " << sci(expected) << ", rel dev " << sci(rel) << " (limit 0.02)\n";
  r.detail = d.str();
  return r;
}

// 7. Power reduction coefficient under Tikhonov phase errors.
inline CriterionResult power_reduction_oracle(const Options& opt) {
  CriterionResult r{7, "A_tau: empirical P_err/P_ideal vs closed form within 2% (rho_tau=10)"};
  const double rho = 10.0;
  std::ostringstream d;
  bool ok = true;
  for (int N : {2, 10, 100}) {
    auto p = SystemParams::with_nodes(N);
    const ErrorModel model = ClosedLoopPhase{rho};
    struct Sums {
      double err = 0.0, ideal = 0.0;
    };
    auto parts = map_chunks(1'000'000, opt.threads, [&](std::int64_t begin, std::int64_t end) {
      Sums s;
      auto rng = seed_for_trial(opt.seed, std::uint64_t(begin), "power-reduction");
      std::vector<cplx> a(N);
      Geometry unused;
      for (std::int64_t t = begin; t < end; ++t) {
        fill_complex_gaussian(a, p.sigma_a_sq, rng);
        const auto tau = sample_phase_errors(p, unused, model, rng);
        cplx sig{};
        double xi = 0.0;
        for (int i = 0; i < N; ++i) {
          sig += std::norm(a[i]) * std::polar(1.0, tau[i]);
          xi += std::norm(a[i]);
        }
        s.err += std::norm(sig);
        s.ideal += xi * xi;
      }
      return s;
    });
    Sums tot;
    for (const auto& s : parts) {
      tot.err += s.err;
      tot.ideal += s.ideal;
    }
    const double empirical = tot.err / tot.ideal;
    const double predicted = power_reduction_coefficient(N, mean_phasor(p, model).value);
    const double rel = std::abs(empirical - predicted) / predicted;
    ok = ok && rel <= 0.02;
    d << "    N=" << N << ": empirical " << sci(empirical) << ", closed form " << sci(predicted) << ", rel dev "
      << sci(rel) << (rel <= 0.02 ? " ok" : " FAIL") << "\n";
  }
  r.passed = ok;
  r.detail = d.str();
  return r;
}

// 8. y(phi_m) / (N mu b sigma_a^2) -> s_m at rate N^-1/2, noise omitted.
inline double mean_relative_deviation(int N, std::int64_t trials, const Options& opt) {
  auto p = SystemParams::with_nodes(N);
  p.sigma_w_sq = 0.0;
  p.sigma_v_sq = 0.0;
  auto parts = map_chunks(trials, opt.threads, [&](std::int64_t begin, std::int64_t end) {
    RunningStats s;
    for (std::int64_t t = begin; t < end; ++t) {
      const auto [ch, pk, slot] = simulate_slot(p, Perfect{}, opt.seed, t);
      const auto y = beamform_and_receive(p, ch, slot, p.dest_angle);
      const double scale = N * p.mu_m * p.b_m * p.sigma_a_sq;
      double acc = 0.0;
      for (int l = 0; l < p.L; ++l) {
        const cplx s = pk.symbols(p.target, l);
        acc += std::abs(y[l] / scale - s) / std::abs(s);
      }
      s.add(acc / p.L);
    }
    return s;
  });
  RunningStats all;
  for (const auto& s : parts) all.merge(s);
  return all.mean;
}

inline CriterionResult convergence(const Options& opt) {
  CriterionResult r{8, "convergence: relative deviation shrinks ~sqrt(10) from N=100 to N=1000"};
  const double d100 = mean_relative_deviation(100, 10'000, opt);
  const double d1000 = mean_relative_deviation(1000, 10'000, opt);
  const double factor = d100 / d1000;
  r.passed = factor >= 2.0 && factor <= 5.0;
  std::ostringstream d;
  d << "    mean deviation N=100: " << sci(d100) << ", N=1000: " << sci(d1000) << ", factor " << sci(factor)
    << " (allowed [2, 5], sqrt(10)=3.162)\n";
  r.detail = d.str();
  return r;
}

// 9. Quadrature against sampling xi directly, and node-doubling stability.
inline double conditional_sep_closed_form(double gamma, int M) {
  // Craig-form inner integral for fixed SINR, written with erfc.
  const double q = 0.5 * std::erfc(std::sqrt(gamma / 2.0));  // Q(sqrt(gamma))
  if (M == 2) return 0.5 * std::erfc(std::sqrt(gamma));
  if (M == 4) return 2.0 * q - q * q;
  throw UsageError("conditional_sep_closed_form: only M = 2 and M = 4");
}

inline CriterionResult quadrature_soundness(const Options& opt) {
  CriterionResult r{9, "quadrature: vs 1e6-sample xi average (<=1e-3 rel), node doubling (<=1e-6 rel)"};
  std::ostringstream d;
  bool ok = true;

  struct Case {
    std::string label;
    SystemParams p;
    SinrMap map;
  };
  auto bpsk = derive_powers(20.0, 0.0, SystemParams::with_nodes(100));
  auto qpsk = derive_powers(20.0, 5.0, SystemParams::with_nodes(100));
  qpsk.M = 4;
  std::vector<Case> sampled{{"BPSK N=100 gamma2=0dB perfect", bpsk, SinrMap::perfect(bpsk)},
                            {"QPSK N=100 gamma2=5dB channel-error 0.1", qpsk, SinrMap::channel_error(qpsk, 0.1)}};
  for (const auto& c : sampled) {
    const double quad = sep_analytic(c.p, c.map);
    const auto& p = c.p;
    auto parts = map_chunks(1'000'000, opt.threads, [&](std::int64_t begin, std::int64_t end) {
      RunningStats s;
      auto rng = seed_for_trial(opt.seed, std::uint64_t(begin), "xi-sampling");
      std::vector<cplx> a(p.N);
      for (std::int64_t t = begin; t < end; ++t) {
        fill_complex_gaussian(a, p.sigma_a_sq, rng);
        double xi = 0.0;
        for (auto v : a) xi += std::norm(v);
        s.add(conditional_sep_closed_form(c.map(xi), p.M));
      }
      return s;
    });
    RunningStats all;
    for (const auto& s : parts) all.merge(s);
    const double rel = std::abs(all.mean - quad) / quad;
    const bool good = rel <= 1e-3;
    ok = ok && good;
    d << "    " << c.label << ": quadrature " << sci(quad) << ", sampled " << sci(all.mean) << " +- "
      << sci(all.stderr_of_mean()) << ", rel " << sci(rel) << (good ? " ok" : " FAIL") << "\n";
  }

  std::vector<Case> doubled = sampled;
  const auto p64 = operating_point(64), p100 = operating_point(100);
  doubled.push_back({"perfect N=64", p64, SinrMap::perfect(p64)});
  doubled.push_back({"perfect N=100", p100, SinrMap::perfect(p100)});
  for (double ratio : {1e-3, 1.0}) doubled.push_back({"channel-error " + sci(ratio), p100, SinrMap::channel_error(p100, ratio)});
  doubled.push_back({"phase A_tau=0.215", p100, SinrMap::phase_approx(p100, 0.215)});
  doubled.push_back({"phase A_tau=0.0198", p100, SinrMap::phase_approx(p100, 0.0198)});
  double worst = 0.0;
  for (const auto& c : doubled) {
    const auto q = sep_analytic_detail(c.p, c.map);
    const double twice = sep_fixed_rule(c.p, c.map, 2 * q.phi_nodes, 2 * q.xi_nodes);
    worst = std::max(worst, std::abs(twice - q.sep) / q.sep);
  }
  const bool stable = worst <= 1e-6;
  ok = ok && stable;
  d << "    node doubling over " << doubled.size() << " configurations: worst rel change " << sci(worst)
    << (stable ? " ok" : " FAIL") << "\n";
  r.passed = ok;
  r.detail = d.str();
  return r;
}

inline std::vector<std::function<CriterionResult(const Options&)>> all_criteria() {
  return {perfect_consistency, channel_error_sweep, closed_loop_sweep, open_loop_grid, beampattern_lift,
          kappa_oracle,        power_reduction_oracle, convergence,     quadrature_soundness};
}

inline std::vector<CriterionResult> run_acceptance(const Options& opt, std::ostream& out) {
  std::vector<CriterionResult> results;
  const auto criteria = all_criteria();
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = int(k) + 1;
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), id) == opt.only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    auto res = criteria[k](opt);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out << (res.passed ? "[PASS] " : "[FAIL] ") << "criterion " << res.id << ": " << res.name << " ("
        << std::fixed << std::setprecision(1) << res.seconds << " s)\n"
        << std::defaultfloat << res.detail << std::flush;
    results.push_back(std::move(res));
  }
  return results;
}

}  // namespace beamforge::acceptance
