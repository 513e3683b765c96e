#pragma once

// The two-slot signal chain: sources collide at the collaborators, each
// collaborator forwards a weighted copy of what it heard, and the copies
// combine at the destination (or at any other azimuth).

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "beamforge/core_model.hpp"
#include "beamforge/matrix.hpp"
#include "beamforge/stochastic.hpp"

namespace beamforge {

struct SourcePackets {
  ComplexMatrix symbols;     // K x L, sigma_s * exp(j 2 pi k / M)
  std::vector<int> indices;  // K x L row-major constellation indices
  int index(std::size_t source, std::size_t l) const { return indices[source * symbols.cols() + l]; }
};

inline cplx psk_point(int index, int M, double sigma_s) {
  return std::polar(sigma_s, two_pi * index / M);
}

inline SourcePackets draw_symbols(const SystemParams& p, Rng& rng) {
  SourcePackets pk{ComplexMatrix(p.K, p.L), std::vector<int>(std::size_t(p.K) * p.L)};
  std::uniform_int_distribution<int> pick(0, p.M - 1);
  const double amp = std::sqrt(p.sigma_s_sq);
  for (int j = 0; j < p.K; ++j)
    for (int l = 0; l < p.L; ++l) {
      const int k = pick(rng);
      pk.indices[std::size_t(j) * p.L + l] = k;
      pk.symbols(j, l) = psk_point(k, p.M, amp);
    }
  return pk;
}

struct SlotSignals {
  ComplexMatrix source_symbols;  // K x L
  ComplexMatrix collab_rx;       // N x L, x_i
  ComplexMatrix collab_noise;    // N x L, w_i
  std::vector<cplx> dest_noise;  // L, v
};

/// Collision reception at every collaborator: x_i = sum_j a_ji s_j + w_i.
/// Noise is drawn from rng only when its power is nonzero.
inline SlotSignals share_slot(const SystemParams& p, const ChannelRealization& ch, const SourcePackets& pk, Rng& rng) {
  const auto& a = ch.gains;
  const auto& s = pk.symbols;
  if (a.rows() != s.rows() || a.cols() != std::size_t(p.N) || s.cols() != std::size_t(p.L) ||
      a.rows() != std::size_t(p.K))
    throw UsageError("share_slot: channel/symbol dimensions do not match params");

  SlotSignals out{s, ComplexMatrix(p.N, p.L), ComplexMatrix(p.N, p.L), std::vector<cplx>(p.L)};
  if (p.sigma_w_sq > 0.0) fill_complex_gaussian(out.collab_noise.data(), p.sigma_w_sq, rng);
  if (p.sigma_v_sq > 0.0) fill_complex_gaussian(out.dest_noise, p.sigma_v_sq, rng);

  for (int i = 0; i < p.N; ++i) {
    auto x = out.collab_rx.row(i);
    auto w = out.collab_noise.row(i);
    for (int l = 0; l < p.L; ++l) x[l] = w[l];
    for (int j = 0; j < p.K; ++j) {
      const cplx aji = a(j, i);
      auto sj = s.row(j);
      for (int l = 0; l < p.L; ++l) x[l] += aji * sj[l];
    }
  }
  return out;
}

/// Per-node transmit weights mu_m b_m conj(a_mi + delta a_mi) exp(j tau_i),
/// i.e. everything node i applies to x_i except the geometric phase, which
/// cancels against propagation at the destination. The path loss b_m is
/// folded in so the weight maps x_i straight to its received contribution.
inline std::vector<cplx> node_weights(const SystemParams& p, const ChannelRealization& ch) {
  std::vector<cplx> g(p.N);
  const double scale = p.mu_m * p.b_m;
  for (int i = 0; i < p.N; ++i)
    g[i] = scale * std::conj(ch.gains(p.target, i) + ch.est_errors[i]) * std::polar(1.0, ch.phase_errors[i]);
  return g;
}

/// exp(j * far_field_phase_offset(i, phi)) for every node.
inline std::vector<cplx> steering(const Geometry& g, double phi) {
  std::vector<cplx> e(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) e[i] = std::polar(1.0, far_field_phase_offset(g, i, phi));
  return e;
}

/// Received packet at azimuth phi (the destination when phi == phi_m).
/// Destination noise is added only when include_dest_noise is set.
inline std::vector<cplx> beamform_and_receive(const SystemParams& p, const ChannelRealization& ch,
                                              const SlotSignals& slot, double phi, bool include_dest_noise = true) {
  auto g = node_weights(p, ch);
  const auto e = steering(ch.geometry, phi);
  for (int i = 0; i < p.N; ++i) g[i] *= e[i];
  std::vector<cplx> y(p.L);
  for (int i = 0; i < p.N; ++i) {
    auto x = slot.collab_rx.row(i);
    for (int l = 0; l < p.L; ++l) y[l] += g[i] * x[l];
  }
  if (include_dest_noise)
    for (int l = 0; l < p.L; ++l) y[l] += slot.dest_noise[l];
  return y;
}

struct SlotDraw {
  ChannelRealization channels;
  SourcePackets packets;
  SlotSignals slot;
};

/// One Monte Carlo trial's worth of randomness: geometry (unless fixed),
/// channels and model errors from the "channel" stream, then symbols and
/// noise from the "signal" stream.
inline SlotDraw simulate_slot(const SystemParams& p, const ErrorModel& model, std::uint64_t seed, std::uint64_t trial,
                              const Geometry* fixed_geometry = nullptr) {
  auto chan_rng = seed_for_trial(seed, trial, "channel");
  Geometry geo = fixed_geometry ? *fixed_geometry : sample_disk_geometry(p, chan_rng);
  auto ch = sample_channels(p, model, std::move(geo), chan_rng);
  auto sig_rng = seed_for_trial(seed, trial, "signal");
  auto pk = draw_symbols(p, sig_rng);
  auto slot = share_slot(p, ch, pk, sig_rng);
  return {std::move(ch), std::move(pk), std::move(slot)};
}

/// xi = sum_i |a_mi|^2 for the target source.
inline double target_gain_energy(const SystemParams& p, const ChannelRealization& ch) {
  double xi = 0.0;
  for (auto a : ch.gains.row(p.target)) xi += std::norm(a);
  return xi;
}

/// Phase the coherent receiver removes before detection: zero for the
/// channel-only models, arg(sum |a_mi|^2 exp(j tau_i)) under phase errors
/// (pilot-aided compensation of the phase distortion).
inline double reference_phase(const SystemParams& p, const ChannelRealization& ch, const ErrorModel& model) {
  if (!is_phase_model(model)) return 0.0;
  cplx acc{};
  for (int i = 0; i < p.N; ++i) acc += std::norm(ch.gains(p.target, i)) * std::polar(1.0, ch.phase_errors[i]);
  return std::arg(acc);
}

}  // namespace beamforge
