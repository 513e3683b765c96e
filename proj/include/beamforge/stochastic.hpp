#pragma once

// Random sampling for the beamforming model: per-trial seeding, node
// geometry, Rayleigh channels, estimation errors and phase errors.

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "beamforge/core_model.hpp"
#include "beamforge/matrix.hpp"

namespace beamforge {

using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Generator for one (trial, stream) pair. The simulators use two streams per
/// trial, "channel" (geometry, gains, model errors) and "signal" (symbols,
/// noise), so runs that differ only in the error model share everything else.
inline Rng seed_for_trial(std::uint64_t master_seed, std::uint64_t trial_index, std::string_view stream_label) {
  std::uint64_t s = detail::splitmix64(master_seed);
  s = detail::splitmix64(s ^ trial_index);
  s = detail::splitmix64(s ^ detail::fnv1a(stream_label));
  return Rng(s);
}

// ---------------------------------------------------------------------------
// Error models

struct Perfect {};
struct ChannelError {
  double sigma_delta_sq = 0.0;
};
struct ClosedLoopPhase {
  double rho_tau = 1.0;  // loop SNR, linear
};
struct OpenLoopPhase {
  double r_max = 0.0;    // wavelengths
  double psi_max = 0.0;  // radians
};

using ErrorModel = std::variant<Perfect, ChannelError, ClosedLoopPhase, OpenLoopPhase>;

inline bool is_phase_model(const ErrorModel& m) {
  return std::holds_alternative<ClosedLoopPhase>(m) || std::holds_alternative<OpenLoopPhase>(m);
}

inline std::string model_name(const ErrorModel& m) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Perfect>) return "perfect";
        else if constexpr (std::is_same_v<T, ChannelError>) return "channel";
        else if constexpr (std::is_same_v<T, ClosedLoopPhase>) return "closed-loop";
        else return "open-loop";
      },
      m);
}

inline void validate(const ErrorModel& m) {
  if (auto* c = std::get_if<ChannelError>(&m); c && !(c->sigma_delta_sq >= 0.0))
    throw ParameterError("sigma_delta_sq must be >= 0");
  if (auto* c = std::get_if<ClosedLoopPhase>(&m); c && !(c->rho_tau > 0.0))
    throw ParameterError("rho_tau must be > 0");
  if (auto* o = std::get_if<OpenLoopPhase>(&m)) {
    if (!(o->r_max >= 0.0)) throw ParameterError("r_max must be >= 0");
    if (!(o->psi_max >= 0.0 && o->psi_max <= std::numbers::pi)) throw ParameterError("psi_max must be in [0, pi]");
  }
}

// ---------------------------------------------------------------------------
// Samplers

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Boost's ziggurat normal is roughly twice as fast as the polar method in
// libstdc++, and normal draws dominate every simulation here.
using NormalDist = boost::random::normal_distribution<double>;

/// Circularly symmetric complex Gaussian; real and imaginary parts each N(0, variance/2).
inline cplx sample_complex_gaussian(double variance, Rng& rng) {
  NormalDist n(0.0, 1.0);
  const double s = std::sqrt(0.5 * variance);
  const double re = n(rng);
  const double im = n(rng);
  return {s * re, s * im};
}

inline void fill_complex_gaussian(std::span<cplx> out, double variance, Rng& rng) {
  NormalDist n(0.0, 1.0);
  const double s = std::sqrt(0.5 * variance);
  for (auto& z : out) {
    const double re = n(rng);
    const double im = n(rng);
    z = {s * re, s * im};
  }
}

/// Nodes uniform by area over a disk of radius R/lambda.
inline Geometry sample_disk_geometry(const SystemParams& p, Rng& rng) {
  Geometry g;
  g.dest_angle = p.dest_angle;
  g.radii.resize(p.N);
  g.angles.resize(p.N);
  for (int i = 0; i < p.N; ++i) {
    g.radii[i] = p.R_over_lambda * std::sqrt(uniform01(rng));
    g.angles[i] = two_pi * uniform01(rng);
  }
  return g;
}

/// Tikhonov (von Mises, mean 0) phase with concentration rho:
/// f(tau) = exp(rho cos tau) / (2 pi I0(rho)) on [-pi, pi].
/// Best-Fisher rejection; wrapped normal above 1e5 where the rejection
/// constants lose precision, uniform below 1e-8.
inline double sample_tikhonov(double rho, Rng& rng) {
  constexpr double pi = std::numbers::pi;
  if (rho < 1e-8) return pi * (2.0 * uniform01(rng) - 1.0);
  if (rho > 1e5) {
    NormalDist n(0.0, 1.0 / std::sqrt(rho));
    return std::remainder(n(rng), two_pi);
  }
  double s;
  if (rho < 1e-5) {
    s = 1.0 / rho + rho;
  } else {
    const double r = 1.0 + std::sqrt(1.0 + 4.0 * rho * rho);
    const double q = (r - std::sqrt(2.0 * r)) / (2.0 * rho);
    s = (1.0 + q * q) / (2.0 * q);
  }
  double w;
  for (;;) {
    const double z = std::cos(pi * uniform01(rng));
    w = (1.0 + s * z) / (s + z);
    const double y = rho * (s - w);
    const double v = uniform01(rng);
    if (y * (2.0 - y) - v >= 0.0 || std::log(y / v) + 1.0 - y >= 0.0) break;
  }
  const double t = std::acos(std::clamp(w, -1.0, 1.0));
  return uniform01(rng) < 0.5 ? -t : t;
}

/// Net far-field phase mismatch of one node when its initial phase is
/// programmed from (r + dr, psi + dpsi) but the signal propagates from (r, psi).
inline double open_loop_phase(double r, double psi, double dr, double dpsi, double dest_angle) {
  return two_pi * ((r + dr) * std::cos(dest_angle - psi - dpsi) - r * std::cos(dest_angle - psi));
}

inline std::vector<double> sample_phase_errors(const SystemParams& p, const Geometry& g, const ErrorModel& model,
                                               Rng& rng) {
  std::vector<double> tau(p.N);
  if (auto* cl = std::get_if<ClosedLoopPhase>(&model)) {
    for (auto& t : tau) t = sample_tikhonov(cl->rho_tau, rng);
  } else if (auto* ol = std::get_if<OpenLoopPhase>(&model)) {
    for (int i = 0; i < p.N; ++i) {
      const double dr = ol->r_max * (2.0 * uniform01(rng) - 1.0);
      const double dpsi = ol->psi_max * (2.0 * uniform01(rng) - 1.0);
      tau[i] = open_loop_phase(g.radii[i], g.angles[i], dr, dpsi, g.dest_angle);
    }
  } else {
    throw UsageError("sample_phase_errors requires a phase error model, got " + model_name(model));
  }
  return tau;
}

struct ChannelRealization {
  ComplexMatrix gains;            // K x N, a_ji
  std::vector<cplx> est_errors;   // delta a_mi, zero unless ChannelError
  std::vector<double> phase_errors;  // tau_i, zero unless a phase model
  Geometry geometry;
};

/// Draws gains first, then model-specific errors, from one generator. Runs
/// under different models with the same seed therefore share the gains, and
/// estimation errors scale with sigma_delta from a common standard draw.
inline ChannelRealization sample_channels(const SystemParams& p, const ErrorModel& model, Geometry geometry, Rng& rng) {
  ChannelRealization ch;
  ch.gains = ComplexMatrix(p.K, p.N);
  fill_complex_gaussian(ch.gains.data(), p.sigma_a_sq, rng);
  ch.est_errors.assign(p.N, cplx{});
  ch.phase_errors.assign(p.N, 0.0);
  if (auto* ce = std::get_if<ChannelError>(&model)) {
    fill_complex_gaussian(ch.est_errors, 1.0, rng);
    const double s = std::sqrt(ce->sigma_delta_sq);
    for (auto& e : ch.est_errors) e *= s;
  } else if (is_phase_model(model)) {
    ch.phase_errors = sample_phase_errors(p, geometry, model, rng);
  }
  ch.geometry = std::move(geometry);
  return ch;
}

}  // namespace beamforge
