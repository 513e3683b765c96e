#pragma once

// Model constants of the two-slot collaborative beamforming scheme and the
// deterministic quantities derived from them.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace beamforge {

/// Invalid model parameter (non-positive power, bad dB target, ...).
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A call that does not make sense for the given arguments.
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Quadrature or estimator failed to reach its accuracy target.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

// Distances are measured in wavelengths throughout, so lambda == 1.
struct SystemParams {
  int N = 100;  // collaborating nodes
  int K = 4;    // sources
  int M = 2;    // PSK order
  int L = 16;   // symbols per packet
  double sigma_s_sq = 1.0;
  double sigma_a_sq = 1.0;
  double sigma_w_sq = 0.01;
  double sigma_v_sq = 0.01;
  double mu_m = 0.01;
  double b_m = 1.0;
  double R_over_lambda = 10.0;
  int target = 0;           // index m of the source being beamformed
  double dest_angle = 0.0;  // phi_m, radians

  /// Unit conventions: sigma_s^2 = sigma_a^2 = b_m = 1, mu_m = 1/N.
  static SystemParams with_nodes(int n) {
    SystemParams p;
    p.N = n;
    p.mu_m = 1.0 / n;
    return p;
  }

  void validate() const {
    if (N < 1) throw ParameterError("N must be >= 1");
    if (K < 1) throw ParameterError("K must be >= 1");
    if (M < 2 || (M & (M - 1)) != 0) throw ParameterError("M must be a power of two >= 2");
    if (L < 1) throw ParameterError("L must be >= 1");
    if (target < 0 || target >= K) throw ParameterError("target must be in [0, K)");
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string(name) + " must be positive and finite");
    };
    positive(sigma_s_sq, "sigma_s_sq");
    positive(sigma_a_sq, "sigma_a_sq");
    positive(mu_m, "mu_m");
    positive(b_m, "b_m");
    // Noise powers may be zero for noiseless experiments.
    if (!(sigma_w_sq >= 0.0) || !(sigma_v_sq >= 0.0)) throw ParameterError("noise powers must be >= 0");
    if (!(R_over_lambda >= 0.0)) throw ParameterError("R_over_lambda must be >= 0");
  }
};

struct DerivedPowers {
  double sigma_eta_sq;  // interference-plus-noise power at a collaborator
  double gamma1;        // average collaborator SNR
  double gamma2;        // destination SNR figure
};

inline DerivedPowers derived_powers(const SystemParams& p) {
  const double array_gain = double(p.N) * p.N * p.mu_m * p.mu_m * p.b_m * p.b_m;
  return {
      (p.K - 1) * p.sigma_a_sq * p.sigma_s_sq + p.sigma_w_sq,
      p.sigma_s_sq * p.sigma_a_sq / p.sigma_w_sq,
      array_gain * p.sigma_s_sq * p.sigma_a_sq * p.sigma_a_sq / p.sigma_v_sq,
  };
}

/// Fixes sigma_w^2 and sigma_v^2 so that the collaborator and destination
/// SNR figures hit the requested targets.
inline SystemParams derive_powers(double gamma1_db, double gamma2_db, SystemParams p) {
  const double g1 = db_to_linear(gamma1_db);
  const double g2 = db_to_linear(gamma2_db);
  if (!std::isfinite(g1) || !(g1 > 0.0)) throw ParameterError("gamma1_dB does not map to a positive finite SNR");
  if (!std::isfinite(g2) || !(g2 > 0.0)) throw ParameterError("gamma2_dB does not map to a positive finite SNR");
  const double array_gain = double(p.N) * p.N * p.mu_m * p.mu_m * p.b_m * p.b_m;
  p.sigma_w_sq = p.sigma_s_sq * p.sigma_a_sq / g1;
  p.sigma_v_sq = array_gain * p.sigma_s_sq * p.sigma_a_sq * p.sigma_a_sq / g2;
  return p;
}

struct Geometry {
  std::vector<double> radii;   // r_i, wavelengths
  std::vector<double> angles;  // psi_i in [0, 2pi)
  double dest_angle = 0.0;     // phi_m
  // nullopt: far field. The common distance cancels in every phase difference.
  std::optional<double> dest_distance;

  std::size_t size() const { return radii.size(); }
};

/// Phase of node i at azimuth phi relative to its phase at the destination,
/// (2pi/lambda) * (d_i(phi) - d_im), under the far-field rule
/// d_i(phi) = d_0m - r_i cos(phi - psi_i).
inline double far_field_phase_offset(const Geometry& g, std::size_t i, double phi) {
  const double r = g.radii[i];
  const double psi = g.angles[i];
  return two_pi * r * (std::cos(g.dest_angle - psi) - std::cos(phi - psi));
}

}  // namespace beamforge
