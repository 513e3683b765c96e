#pragma once

// Symbol error probability of the beamformed link: the SINR maps for the
// perfect, channel-error and phase-error cases, their Erlang-averaged SEP by
// Gauss quadrature, and the full-chain Monte Carlo estimate.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "beamforge/core_model.hpp"
#include "beamforge/parallel.hpp"
#include "beamforge/protocol.hpp"
#include "beamforge/quadrature.hpp"
#include "beamforge/stochastic.hpp"

namespace beamforge {

// ---------------------------------------------------------------------------
// SINR as a function of xi = sum_i |a_mi|^2

inline double sinr_perfect(const SystemParams& p, double xi) {
  const double g2 = p.mu_m * p.mu_m * p.b_m * p.b_m;
  const double eta = derived_powers(p).sigma_eta_sq;
  return g2 * p.sigma_s_sq * xi * xi / (g2 * eta * xi + p.sigma_v_sq);
}

/// E|kappa|^2 given the target channel: interference from the other sources,
/// collaborator noise and the estimation-error leakage of s_m.
inline double kappa_variance(const SystemParams& p, double sigma_delta_sq, double xi) {
  const double g2 = p.mu_m * p.mu_m * p.b_m * p.b_m;
  const double eta = derived_powers(p).sigma_eta_sq;
  return g2 * (eta + p.sigma_s_sq * sigma_delta_sq) * xi + g2 * eta * p.N * sigma_delta_sq;
}

/// SINR with kappa treated as CN(0, kappa_variance).
inline double sinr_channel_err(const SystemParams& p, double sigma_delta_sq, double xi) {
  const double g2 = p.mu_m * p.mu_m * p.b_m * p.b_m;
  return g2 * p.sigma_s_sq * xi * xi / (kappa_variance(p, sigma_delta_sq, xi) + p.sigma_v_sq);
}

class SinrMap {
 public:
  enum class Kind { Perfect, ChannelErr, PhaseApprox };

  static SinrMap perfect(const SystemParams& p) { return {Kind::Perfect, p, 0.0, 1.0}; }
  static SinrMap channel_error(const SystemParams& p, double sigma_delta_sq) {
    if (!(sigma_delta_sq >= 0.0)) throw ParameterError("sigma_delta_sq must be >= 0");
    return {Kind::ChannelErr, p, sigma_delta_sq, 1.0};
  }
  /// Perfect-condition SINR scaled by the power reduction coefficient.
  static SinrMap phase_approx(const SystemParams& p, double a_tau) {
    if (!(a_tau > 0.0 && a_tau <= 1.0)) throw ParameterError("A_tau must be in (0, 1]");
    return {Kind::PhaseApprox, p, 0.0, a_tau};
  }

  double operator()(double xi) const {
    switch (kind_) {
      case Kind::ChannelErr: return sinr_channel_err(p_, sigma_delta_sq_, xi);
      case Kind::PhaseApprox: return a_tau_ * sinr_perfect(p_, xi);
      case Kind::Perfect: break;
    }
    return sinr_perfect(p_, xi);
  }

  Kind kind() const { return kind_; }
  const SystemParams& params() const { return p_; }
  double sigma_delta_sq() const { return sigma_delta_sq_; }
  double a_tau() const { return a_tau_; }

 private:
  SinrMap(Kind k, const SystemParams& p, double sd, double at) : kind_(k), p_(p), sigma_delta_sq_(sd), a_tau_(at) {}
  Kind kind_;
  SystemParams p_;
  double sigma_delta_sq_;
  double a_tau_;
};

// ---------------------------------------------------------------------------
// Phase-error power reduction

struct MeanPhasor {
  double value = 1.0;    // |E{exp(j tau)}|^2
  double stderr_ = 0.0;  // zero for the quadrature route
};

struct MeanPhasorOptions {
  std::int64_t samples = 10'000'000;  // open-loop Monte Carlo size
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

namespace detail {

// E{cos tau} under the Tikhonov density. Both integrals carry the factor
// exp(-rho) so large rho cannot overflow, and 1 - E{cos} is integrated
// directly to keep precision when the density is concentrated. The
// variable s = tau * max(1, sqrt(rho)) keeps the peak width of order one.
inline double tikhonov_mean_cos(double rho) {
  using boost::math::quadrature::gauss_kronrod;
  constexpr double pi = std::numbers::pi;
  const double k = std::max(1.0, std::sqrt(rho));
  auto one_minus_cos = [k](double s) {
    const double h = std::sin(0.5 * s / k);
    return 2.0 * h * h;
  };
  auto density = [&](double s) { return std::exp(-rho * one_minus_cos(s)); };
  auto deficit = [&](double s) {
    const double h = one_minus_cos(s);
    return h * std::exp(-rho * h);
  };
  const double top = pi * k;
  const double split = std::min(top, 10.0);
  double e1 = 0, e2 = 0, e3 = 0, e4 = 0;
  const double den = gauss_kronrod<double, 31>::integrate(density, 0.0, split, 20, 1e-13, &e1) +
                     (split < top ? gauss_kronrod<double, 31>::integrate(density, split, top, 20, 1e-13, &e2) : 0.0);
  const double num = gauss_kronrod<double, 31>::integrate(deficit, 0.0, split, 20, 1e-13, &e3) +
                     (split < top ? gauss_kronrod<double, 31>::integrate(deficit, split, top, 20, 1e-13, &e4) : 0.0);
  if (!(den > 0.0) || !std::isfinite(num) || e1 + e2 > 1e-10 * den || e3 + e4 > 1e-10 * std::max(num, 1e-300)) {
    std::ostringstream msg;
    msg << "tikhonov_mean_cos: quadrature did not converge (rho=" << rho << ", denominator=" << den
        << ", deficit=" << num << ", error estimates=" << e1 << "," << e2 << "," << e3 << "," << e4 << ")";
    throw NumericError(msg.str());
  }
  return 1.0 - num / den;
}

}  // namespace detail

/// |E{exp(j tau)}|^2 for a phase error model. Closed-loop: adaptive
/// quadrature over the Tikhonov density (E{sin tau} = 0 by symmetry).
/// Open-loop: Monte Carlo over node location and location errors, with the
/// O(1/n) bias of |sample mean|^2 removed.
inline MeanPhasor mean_phasor(const SystemParams& p, const ErrorModel& model, const MeanPhasorOptions& opt = {}) {
  validate(model);
  if (auto* cl = std::get_if<ClosedLoopPhase>(&model)) {
    const double c = detail::tikhonov_mean_cos(cl->rho_tau);
    return {c * c, 0.0};
  }
  auto* ol = std::get_if<OpenLoopPhase>(&model);
  if (!ol) throw UsageError("mean_phasor requires a phase error model, got " + model_name(model));
  if (opt.samples < 2) throw UsageError("mean_phasor: need at least 2 samples");

  struct Sums {
    double c = 0, s = 0, cc = 0, ss = 0, cs = 0;
  };
  const double R = p.R_over_lambda;
  auto parts = map_chunks(
      opt.samples, opt.threads,
      [&](std::int64_t begin, std::int64_t end) {
        Sums acc;
        auto rng = seed_for_trial(opt.seed, std::uint64_t(begin), "open-loop-phasor");
        for (std::int64_t k = begin; k < end; ++k) {
          const double r = R * std::sqrt(uniform01(rng));
          const double psi = two_pi * uniform01(rng);
          const double dr = ol->r_max * (2.0 * uniform01(rng) - 1.0);
          const double dpsi = ol->psi_max * (2.0 * uniform01(rng) - 1.0);
          const double tau = open_loop_phase(r, psi, dr, dpsi, p.dest_angle);
          const double c = std::cos(tau), s = std::sin(tau);
          acc.c += c;
          acc.s += s;
          acc.cc += c * c;
          acc.ss += s * s;
          acc.cs += c * s;
        }
        return acc;
      },
      65536);
  Sums t;
  for (const auto& q : parts) {
    t.c += q.c;
    t.s += q.s;
    t.cc += q.cc;
    t.ss += q.ss;
    t.cs += q.cs;
  }
  const double n = double(opt.samples);
  const double mc = t.c / n, ms = t.s / n;
  const double vc = std::max(0.0, (t.cc - n * mc * mc) / (n - 1));
  const double vs = std::max(0.0, (t.ss - n * ms * ms) / (n - 1));
  const double cv = (t.cs - n * mc * ms) / (n - 1);
  const double value = std::clamp(mc * mc + ms * ms - (vc + vs) / n, 0.0, 1.0);
  // Delta method on |m|^2: gradient 2 m.
  const double var = 4.0 * (mc * mc * vc + ms * ms * vs + 2.0 * mc * ms * cv) / n;
  return {value, std::sqrt(std::max(0.0, var))};
}

/// Ratio of mean received signal power with and without phase errors.
inline double power_reduction_coefficient(int N, double mean_phasor_sq) {
  if (N < 1) throw ParameterError("power_reduction_coefficient: N must be >= 1");
  if (!(mean_phasor_sq >= -1e-12 && mean_phasor_sq <= 1.0 + 1e-12))
    throw ParameterError("power_reduction_coefficient: |E{exp(j tau)}|^2 must be in [0, 1]");
  const double m = std::clamp(mean_phasor_sq, 0.0, 1.0);
  return (2.0 + (N - 1) * m) / (N + 1);
}

/// SINR map matching an error model; phase models go through A_tau.
inline SinrMap sinr_map_for(const SystemParams& p, const ErrorModel& model, const MeanPhasorOptions& opt = {}) {
  validate(model);
  if (auto* ce = std::get_if<ChannelError>(&model)) return SinrMap::channel_error(p, ce->sigma_delta_sq);
  if (is_phase_model(model))
    return SinrMap::phase_approx(p, power_reduction_coefficient(p.N, mean_phasor(p, model, opt).value));
  return SinrMap::perfect(p);
}

// ---------------------------------------------------------------------------
// Analytic SEP

struct QuadSpec {
  int phi_nodes = 32;  // starting Gauss-Legendre size
  int xi_nodes = 32;   // starting Gauss-Laguerre size
  double rel_tol = 1e-7;
  int max_nodes = 4096;
};

struct SepQuadrature {
  double sep = 0.0;
  double rel_change = 0.0;  // relative change over the last node doubling
  int phi_nodes = 0;
  int xi_nodes = 0;
};

/// M-PSK SEP averaged over xi ~ Erlang(N, sigma_a^2) for a fixed rule size:
/// (1/pi) int_0^{(M-1)pi/M} E_xi[exp(-sin^2(pi/M) gamma(xi) / sin^2 phi)] dphi.
/// With xi = sigma_a^2 t the Erlang density is exactly the generalized
/// Laguerre weight t^(N-1) e^-t / Gamma(N).
inline double sep_fixed_rule(const SystemParams& p, const SinrMap& map, int phi_nodes, int xi_nodes) {
  constexpr double pi = std::numbers::pi;
  const auto outer = quadrature::gauss_legendre(phi_nodes, 0.0, (p.M - 1) * pi / p.M);
  const auto inner = quadrature::gauss_laguerre(xi_nodes, p.N - 1.0);
  const double g = std::pow(std::sin(pi / p.M), 2);
  std::vector<double> gamma(inner.nodes.size());
  for (std::size_t k = 0; k < gamma.size(); ++k) gamma[k] = map(p.sigma_a_sq * inner.nodes[k]);
  double total = 0.0;
  for (std::size_t j = 0; j < outer.nodes.size(); ++j) {
    const double s = std::sin(outer.nodes[j]);
    const double c = g / (s * s);
    double avg = 0.0;
    for (std::size_t k = 0; k < gamma.size(); ++k) avg += inner.weights[k] * std::exp(-c * gamma[k]);
    total += outer.weights[j] * avg;
  }
  return total / pi;
}

/// Doubles both rule sizes until the result changes by less than rel_tol.
inline SepQuadrature sep_analytic_detail(const SystemParams& p, const SinrMap& map, const QuadSpec& q = {}) {
  p.validate();
  int nphi = q.phi_nodes, nxi = q.xi_nodes;
  double prev = sep_fixed_rule(p, map, nphi, nxi);
  for (;;) {
    if (2 * std::max(nphi, nxi) > q.max_nodes) {
      std::ostringstream msg;
      msg << "sep_analytic: no convergence to " << q.rel_tol << " within " << q.max_nodes
          << " nodes (last value " << prev << ")";
      throw NumericError(msg.str());
    }
    nphi *= 2;
    nxi *= 2;
    const double cur = sep_fixed_rule(p, map, nphi, nxi);
    const double change = cur == prev ? 0.0 : std::abs(cur - prev) / std::max(std::abs(cur), 1e-300);
    if (change <= q.rel_tol) return {cur, change, nphi, nxi};
    prev = cur;
  }
}

inline double sep_analytic(const SystemParams& p, const SinrMap& map, const QuadSpec& q = {}) {
  return sep_analytic_detail(p, map, q).sep;
}

// ---------------------------------------------------------------------------
// Detection and Monte Carlo SEP

/// Nearest M-PSK point after removing reference_phase. A point exactly on a
/// sector boundary goes to the lower of the two adjacent indices.
inline int detect_psk(cplx received, double reference_phase, int M) {
  if (M < 2) throw ParameterError("detect_psk: M must be >= 2");
  const double a = std::arg(received * std::polar(1.0, -reference_phase));
  const double x = a * M / two_pi;
  const double fl = std::floor(x);
  auto wrap = [M](double v) { return int(((long long)v % M + M) % M); };
  if (std::abs((x - fl) - 0.5) <= 1e-12 * M) return std::min(wrap(fl), wrap(fl + 1));
  return wrap(std::nearbyint(x));
}

struct SepEstimate {
  double sep = 0.0;
  double stderr_ = 0.0;
  std::int64_t errors = 0;
  std::int64_t decisions = 0;
};

/// Full signal chain per trial (fresh geometry, channels, errors, symbols,
/// noise), detecting the L symbols of the target source at phi_m.
inline SepEstimate mc_sep(const SystemParams& p, const ErrorModel& model, std::int64_t trials, std::uint64_t seed,
                          unsigned threads = 0) {
  p.validate();
  validate(model);
  if (trials < 1) throw UsageError("mc_sep: trials must be >= 1");
  auto parts = map_chunks(trials, threads, [&](std::int64_t begin, std::int64_t end) {
    std::int64_t errors = 0;
    for (std::int64_t t = begin; t < end; ++t) {
      const auto [ch, pk, slot] = simulate_slot(p, model, seed, t);
      const auto y = beamform_and_receive(p, ch, slot, p.dest_angle);
      const double ref = reference_phase(p, ch, model);
      for (int l = 0; l < p.L; ++l) errors += detect_psk(y[l], ref, p.M) != pk.index(p.target, l);
    }
    return errors;
  });
  SepEstimate est;
  for (auto e : parts) est.errors += e;
  est.decisions = trials * p.L;
  est.sep = double(est.errors) / est.decisions;
  est.stderr_ = std::sqrt(est.sep * (1.0 - est.sep) / est.decisions);
  return est;
}

struct SepCurve {
  std::string axis;
  std::vector<double> abscissa;
  std::vector<double> analytic;
  std::vector<double> mc;
  std::vector<double> mc_stderr;
  std::int64_t trials = 0;
};

}  // namespace beamforge
