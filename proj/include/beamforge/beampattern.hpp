#pragma once

// Monte Carlo average beampattern and the analytic sidelobe lift caused by
// channel-estimation errors.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "beamforge/core_model.hpp"
#include "beamforge/parallel.hpp"
#include "beamforge/protocol.hpp"
#include "beamforge/stochastic.hpp"

namespace beamforge {

struct BeampatternCurve {
  std::vector<double> phis;   // radians
  std::vector<double> power;  // mean received power
  std::vector<double> stderr_;
  std::int64_t trials = 0;
};

struct BeampatternOptions {
  bool fixed_geometry = false;  // draw node locations once instead of per trial
  unsigned threads = 0;
};

/// n equally spaced angles from lo to hi inclusive.
inline std::vector<double> uniform_grid(double lo, double hi, int n) {
  if (n < 1) throw UsageError("uniform_grid: n must be >= 1");
  std::vector<double> g(n);
  for (int k = 0; k < n; ++k) g[k] = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
  return g;
}

/// Sidelobe floor added by estimation errors of variance sigma_delta_sq;
/// constant in phi.
inline double delta_pav_analytic(const SystemParams& p, double sigma_delta_sq) {
  const auto d = derived_powers(p);
  const double coherent = double(p.N) * p.N * p.mu_m * p.mu_m * p.b_m * p.b_m * p.sigma_s_sq * p.sigma_a_sq * p.sigma_a_sq;
  const double ratio = sigma_delta_sq / p.sigma_a_sq;
  return coherent * (p.K * ratio / p.N + ratio / (p.N * d.gamma1));
}

namespace detail {

// Per-angle running statistics for the error-free part |y|^2, the
// estimation-error part |d|^2, and |y|^2 + s |d|^2 for each error scale s.
struct PatternAccumulator {
  std::vector<RunningStats> base, error;
  std::vector<std::vector<RunningStats>> total;
  PatternAccumulator() = default;
  PatternAccumulator(std::size_t n, std::size_t scales)
      : base(n), error(n), total(scales, std::vector<RunningStats>(n)) {}
  void merge(const PatternAccumulator& o) {
    for (std::size_t k = 0; k < base.size(); ++k) {
      base[k].merge(o.base[k]);
      error[k].merge(o.error[k]);
      for (std::size_t s = 0; s < total.size(); ++s) total[s][k].merge(o.total[s][k]);
    }
  }
};

// Received signal splits as y + d, with y carried by the true gains a_mi and
// d = mu b sum conj(delta a_mi) x_i e^{j theta_i} by the estimation errors.
// Pairing each error draw with its negation (antithetic) gives the
// unbiased per-trial power |y|^2 + |d|^2 and removes the zero-mean cross term.
// Since d is linear in the error draw, one pass also serves every variance
// in error_scales (relative to the model's own).
inline PatternAccumulator run_pattern(const SystemParams& p, const ErrorModel& model, const std::vector<double>& grid,
                                      std::int64_t trials, std::uint64_t seed, const BeampatternOptions& opt,
                                      const std::vector<double>& error_scales = {1.0}) {
  p.validate();
  validate(model);
  if (trials < 1) throw UsageError("mc_beampattern: trials must be >= 1");
  if (grid.empty()) throw UsageError("mc_beampattern: empty angle grid");

  std::optional<Geometry> fixed;
  if (opt.fixed_geometry) {
    auto rng = seed_for_trial(seed, 0, "geometry-fixed");
    fixed = sample_disk_geometry(p, rng);
  }

  auto chunk = [&](std::int64_t begin, std::int64_t end) {
    PatternAccumulator acc(grid.size(), error_scales.size());
    std::vector<double> cos_phi(grid.size()), sin_phi(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      cos_phi[k] = std::cos(grid[k]);
      sin_phi[k] = std::sin(grid[k]);
    }
    std::vector<cplx> g(p.N), h(p.N), u(p.N), v(p.N), y(p.L), d(p.L);
    std::vector<double> wave(p.N), cpsi(p.N), spsi(p.N), at_dest(p.N);
    const double scale = p.mu_m * p.b_m;
    for (std::int64_t t = begin; t < end; ++t) {
      const auto [ch, pk, slot] = simulate_slot(p, model, seed, t, fixed ? &*fixed : nullptr);
      const auto& geo = ch.geometry;

      bool has_error = false;
      for (int i = 0; i < p.N; ++i) {
        const cplx rot = std::polar(1.0, ch.phase_errors[i]);
        g[i] = scale * std::conj(ch.gains(p.target, i)) * rot;
        h[i] = scale * std::conj(ch.est_errors[i]) * rot;
        has_error = has_error || h[i] != cplx{};
        // far_field_phase_offset with cos(phi - psi) expanded, so each
        // (node, angle) pair costs a single sincos.
        wave[i] = two_pi * geo.radii[i];
        cpsi[i] = std::cos(geo.angles[i]);
        spsi[i] = std::sin(geo.angles[i]);
        at_dest[i] = wave[i] * std::cos(geo.dest_angle - geo.angles[i]);
      }

      for (std::size_t k = 0; k < grid.size(); ++k) {
        for (int i = 0; i < p.N; ++i) {
          const double theta = at_dest[i] - wave[i] * (cos_phi[k] * cpsi[i] + sin_phi[k] * spsi[i]);
          const cplx e(std::cos(theta), std::sin(theta));
          u[i] = g[i] * e;
          v[i] = h[i] * e;
        }
        std::fill(y.begin(), y.end(), cplx{});
        std::fill(d.begin(), d.end(), cplx{});
        for (int i = 0; i < p.N; ++i) {
          auto x = slot.collab_rx.row(i);
          for (int l = 0; l < p.L; ++l) y[l] += u[i] * x[l];
          if (has_error)
            for (int l = 0; l < p.L; ++l) d[l] += v[i] * x[l];
        }
        double py = 0.0, pd = 0.0;
        for (int l = 0; l < p.L; ++l) {
          py += std::norm(y[l]);
          pd += std::norm(d[l]);
        }
        py /= p.L;
        pd /= p.L;
        acc.base[k].add(py);
        acc.error[k].add(pd);
        for (std::size_t s = 0; s < error_scales.size(); ++s) acc.total[s][k].add(py + error_scales[s] * pd);
      }
    }
    return acc;
  };

  auto parts = map_chunks(trials, opt.threads, chunk, 64);
  PatternAccumulator acc(grid.size(), error_scales.size());
  for (const auto& part : parts) acc.merge(part);
  return acc;
}

inline BeampatternCurve to_curve(const std::vector<double>& grid, const std::vector<RunningStats>& s,
                                 std::int64_t trials) {
  BeampatternCurve c{grid, {}, {}, trials};
  for (const auto& r : s) {
    c.power.push_back(r.mean);
    c.stderr_.push_back(r.stderr_of_mean());
  }
  return c;
}

}  // namespace detail

/// Average received power versus azimuth, destination noise excluded.
/// Geometry, channels, symbols and noise are redrawn every trial unless
/// opt.fixed_geometry pins the node locations.
inline BeampatternCurve mc_beampattern(const SystemParams& p, const ErrorModel& model, const std::vector<double>& grid,
                                       std::int64_t trials, std::uint64_t seed, const BeampatternOptions& opt = {}) {
  auto acc = detail::run_pattern(p, model, grid, trials, seed, opt);
  return detail::to_curve(grid, acc.total[0], trials);
}

struct BeampatternComparison {
  double sigma_delta_sq = 0.0;
  BeampatternCurve perfect;
  BeampatternCurve imperfect;
  BeampatternCurve difference;  // imperfect - perfect, paired per trial
};

/// Perfect and channel-error beampatterns from the same draws (common random
/// numbers), so their difference isolates the estimation-error contribution.
/// All requested variances scale one standard error draw per trial.
inline std::vector<BeampatternComparison> mc_beampattern_comparison(const SystemParams& p,
                                                                    const std::vector<double>& sigma_delta_sqs,
                                                                    const std::vector<double>& grid,
                                                                    std::int64_t trials, std::uint64_t seed,
                                                                    const BeampatternOptions& opt = {}) {
  for (double s : sigma_delta_sqs)
    if (!(s >= 0.0)) throw ParameterError("sigma_delta_sq must be >= 0");
  auto acc = detail::run_pattern(p, ChannelError{1.0}, grid, trials, seed, opt, sigma_delta_sqs);
  std::vector<BeampatternComparison> out;
  const auto perfect = detail::to_curve(grid, acc.base, trials);
  const auto unit = detail::to_curve(grid, acc.error, trials);
  for (std::size_t s = 0; s < sigma_delta_sqs.size(); ++s) {
    auto diff = unit;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      diff.power[k] *= sigma_delta_sqs[s];
      diff.stderr_[k] *= sigma_delta_sqs[s];
    }
    out.push_back({sigma_delta_sqs[s], perfect, detail::to_curve(grid, acc.total[s], trials), std::move(diff)});
  }
  return out;
}

}  // namespace beamforge
