#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "beamforge/protocol.hpp"
#include "beamforge/sep.hpp"

using namespace beamforge;

namespace {

SystemParams small_params() {
  auto p = derive_powers(10.0, 10.0, SystemParams::with_nodes(8));
  p.K = 3;
  p.L = 5;
  p.M = 4;
  p.target = 1;
  p.R_over_lambda = 2.0;
  p.dest_angle = 0.7;
  return p;
}

}  // namespace

TEST(Protocol, SymbolsOnTheConstellation) {
  auto p = small_params();
  auto rng = seed_for_trial(0, 0, "s");
  const auto pk = draw_symbols(p, rng);
  for (int j = 0; j < p.K; ++j)
    for (int l = 0; l < p.L; ++l) {
      const int k = pk.index(j, l);
      ASSERT_GE(k, 0);
      ASSERT_LT(k, p.M);
      EXPECT_NEAR(std::abs(pk.symbols(j, l) - std::polar(1.0, two_pi * k / p.M)), 0.0, 1e-15);
    }
}

TEST(Protocol, ShareSlotIsTheCollisionSum) {
  const auto p = small_params();
  const auto d = simulate_slot(p, ChannelError{0.1}, 11, 2);
  for (int i = 0; i < p.N; ++i)
    for (int l = 0; l < p.L; ++l) {
      cplx x = d.slot.collab_noise(i, l);
      for (int j = 0; j < p.K; ++j) x += d.channels.gains(j, i) * d.packets.symbols(j, l);
      EXPECT_NEAR(std::abs(x - d.slot.collab_rx(i, l)), 0.0, 1e-13);
    }
}

TEST(Protocol, ShareSlotRejectsMismatchedShapes) {
  auto p = small_params();
  auto d = simulate_slot(p, Perfect{}, 1, 0);
  auto q = p;
  q.L = p.L + 1;
  auto rng = seed_for_trial(0, 0, "x");
  EXPECT_THROW(share_slot(q, d.channels, d.packets, rng), UsageError);
}

// Direct evaluation of sum_i mu b conj(a + da) e^{j tau} e^{j 2 pi r (cos(phi_m - psi) - cos(phi - psi))} x_i + v.
TEST(Protocol, ReceivedSignalMatchesDirectSum) {
  const auto p = small_params();
  for (const ErrorModel& model : {ErrorModel{Perfect{}}, ErrorModel{ChannelError{0.2}}, ErrorModel{ClosedLoopPhase{3.0}},
                                  ErrorModel{OpenLoopPhase{0.3, 0.1}}}) {
    const auto d = simulate_slot(p, model, 5, 9);
    const auto& ch = d.channels;
    for (double phi : {p.dest_angle, 0.0, 2.5}) {
      const auto y = beamform_and_receive(p, ch, d.slot, phi);
      for (int l = 0; l < p.L; ++l) {
        cplx want = d.slot.dest_noise[l];
        for (int i = 0; i < p.N; ++i) {
          const double r = ch.geometry.radii[i], psi = ch.geometry.angles[i];
          const double geo = 2 * std::acos(-1.0) * r * (std::cos(p.dest_angle - psi) - std::cos(phi - psi));
          want += p.mu_m * p.b_m * std::conj(ch.gains(p.target, i) + ch.est_errors[i]) *
                  std::exp(cplx(0, ch.phase_errors[i] + geo)) * d.slot.collab_rx(i, l);
        }
        EXPECT_NEAR(std::abs(y[l] - want), 0.0, 1e-12);
      }
    }
  }
}

TEST(Protocol, NoiselessPerfectSingleSourceIsExact) {
  auto p = SystemParams::with_nodes(16);
  p.K = 1;
  p.sigma_w_sq = p.sigma_v_sq = 0.0;
  const auto d = simulate_slot(p, Perfect{}, 3, 0);
  const double xi = target_gain_energy(p, d.channels);
  const auto y = beamform_and_receive(p, d.channels, d.slot, p.dest_angle);
  for (int l = 0; l < p.L; ++l)
    EXPECT_NEAR(std::abs(y[l] - p.mu_m * p.b_m * xi * d.packets.symbols(0, l)), 0.0, 1e-13);
}

TEST(Protocol, DestinationNoiseToggle) {
  const auto p = small_params();
  const auto d = simulate_slot(p, Perfect{}, 2, 2);
  const auto with = beamform_and_receive(p, d.channels, d.slot, p.dest_angle, true);
  const auto without = beamform_and_receive(p, d.channels, d.slot, p.dest_angle, false);
  for (int l = 0; l < p.L; ++l) EXPECT_NEAR(std::abs(with[l] - without[l] - d.slot.dest_noise[l]), 0.0, 1e-14);
}

TEST(Protocol, SimulateSlotIsDeterministicAndFixedGeometryHonoured) {
  const auto p = small_params();
  const auto a = simulate_slot(p, ClosedLoopPhase{2.0}, 4, 7);
  const auto b = simulate_slot(p, ClosedLoopPhase{2.0}, 4, 7);
  EXPECT_EQ(a.channels.phase_errors, b.channels.phase_errors);
  EXPECT_EQ(a.packets.indices, b.packets.indices);
  Geometry g = a.channels.geometry;
  for (auto& r : g.radii) r = 0.5;
  const auto c = simulate_slot(p, ClosedLoopPhase{2.0}, 4, 8, &g);
  EXPECT_EQ(c.channels.geometry.radii, g.radii);
}

TEST(Protocol, ReferencePhase) {
  const auto p = small_params();
  const auto d = simulate_slot(p, ClosedLoopPhase{1.0}, 1, 1);
  cplx acc{};
  for (int i = 0; i < p.N; ++i) acc += std::norm(d.channels.gains(p.target, i)) * std::exp(cplx(0, d.channels.phase_errors[i]));
  EXPECT_NEAR(reference_phase(p, d.channels, ClosedLoopPhase{1.0}), std::arg(acc), 1e-14);
  EXPECT_EQ(reference_phase(p, d.channels, Perfect{}), 0.0);
}

TEST(Detection, NearestPointAndTies) {
  for (int M : {2, 4, 8, 16})
    for (int k = 0; k < M; ++k) {
      const cplx s = std::polar(1.0, two_pi * k / M);
      EXPECT_EQ(detect_psk(s, 0.0, M), k);
      EXPECT_EQ(detect_psk(0.3 * s * std::polar(1.0, 0.4 * two_pi / M), 0.0, M), k);
      // The reference phase is removed before the decision.
      EXPECT_EQ(detect_psk(s * std::polar(1.0, 1.1), 1.1, M), k);
    }
  // Decision boundaries go to the lower adjacent index (mod M).
  EXPECT_EQ(detect_psk({0.0, 1.0}, 0.0, 2), 0);
  EXPECT_EQ(detect_psk({0.0, -1.0}, 0.0, 2), 0);
  EXPECT_EQ(detect_psk(std::polar(1.0, std::acos(-1.0) / 4), 0.0, 4), 0);
  EXPECT_EQ(detect_psk(std::polar(1.0, -std::acos(-1.0) / 4), 0.0, 4), 0);
  EXPECT_EQ(detect_psk(std::polar(1.0, 3 * std::acos(-1.0) / 4), 0.0, 4), 1);
}

TEST(Protocol, BoresightIdentity) {
  auto p = SystemParams::with_nodes(32);
  p.sigma_w_sq = p.sigma_v_sq = 0.0;
  p.K = 1;
  p.M = 8;
  const auto d = simulate_slot(p, Perfect{}, 12, 3);
  const auto y = beamform_and_receive(p, d.channels, d.slot, p.dest_angle);
  for (int l = 0; l < p.L; ++l) {
    const cplx ratio = y[l] / d.packets.symbols(0, l);
    EXPECT_NEAR(std::arg(ratio), 0.0, 1e-12);
    EXPECT_GT(ratio.real(), 0.0);
  }
}

TEST(Protocol, LinearInSourceSymbols) {
  auto p = small_params();
  p.sigma_w_sq = p.sigma_v_sq = 0.0;
  const auto d = simulate_slot(p, ChannelError{0.1}, 4, 4);
  auto doubled = d.packets;
  for (auto& s : doubled.symbols.data()) s *= 2.0;
  auto rng = seed_for_trial(0, 0, "unused");
  const auto slot2 = share_slot(p, d.channels, doubled, rng);
  for (double phi : {p.dest_angle, 1.9}) {
    const auto y1 = beamform_and_receive(p, d.channels, d.slot, phi);
    const auto y2 = beamform_and_receive(p, d.channels, slot2, phi);
    for (int l = 0; l < p.L; ++l) EXPECT_EQ(y2[l], 2.0 * y1[l]);
  }
}

TEST(Protocol, PhaseErrorsLeaveInterferenceStatisticsUnchanged) {
  // Interference plus noise at the destination, y - mu b sum |a|^2 e^{j tau} s_m,
  // has the same variance with or without phase errors.
  auto p = derive_powers(10.0, 20.0, SystemParams::with_nodes(16));
  p.sigma_v_sq = 0.0;
  auto variance = [&](const ErrorModel& m) {
    double acc = 0.0, acc2 = 0.0;
    int n = 0;
    for (int t = 0; t < 20000; ++t) {
      const auto d = simulate_slot(p, m, 31, t);
      cplx gain{};
      for (int i = 0; i < p.N; ++i)
        gain += std::norm(d.channels.gains(p.target, i)) * std::exp(cplx(0, d.channels.phase_errors[i]));
      const auto y = beamform_and_receive(p, d.channels, d.slot, p.dest_angle);
      for (int l = 0; l < p.L; ++l) {
        const double e = std::norm(y[l] - p.mu_m * p.b_m * gain * d.packets.symbols(p.target, l));
        acc += e;
        acc2 += e * e;
        ++n;
      }
    }
    const double mean = acc / n;
    return std::pair(mean, std::sqrt((acc2 / n - mean * mean) / n));
  };
  const auto [v0, s0] = variance(Perfect{});
  const auto [v1, s1] = variance(ClosedLoopPhase{1.0});
  EXPECT_NEAR(v0, v1, 3.0 * std::hypot(s0, s1));
  const auto d = derived_powers(p);
  EXPECT_NEAR(v0, p.mu_m * p.mu_m * d.sigma_eta_sq * p.N * p.sigma_a_sq, 3.0 * s0);
}
