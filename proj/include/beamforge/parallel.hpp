#pragma once

// Deterministic parallel Monte Carlo. Trials are cut into fixed-size chunks
// independent of the worker count; each chunk is reduced serially and the
// chunk results are merged in index order, so the outcome is bit-identical
// for any number of threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace beamforge {

inline constexpr std::int64_t default_chunk_trials = 256;

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(begin, end) over [0, count) in chunks and returns the per-chunk
/// results in chunk order.
template <class Fn>
auto map_chunks(std::int64_t count, unsigned threads, Fn&& fn, std::int64_t chunk = default_chunk_trials) {
  using Result = decltype(fn(std::int64_t{}, std::int64_t{}));
  const std::int64_t nchunks = count <= 0 ? 0 : (count + chunk - 1) / chunk;
  std::vector<Result> results(nchunks);
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::int64_t c = next.fetch_add(1);
      if (c >= nchunks) return;
      try {
        results[c] = fn(c * chunk, std::min(count, (c + 1) * chunk));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = nchunks;
        return;
      }
    }
  };

  const unsigned n = std::min<std::int64_t>(resolve_threads(threads), std::max<std::int64_t>(nchunks, 1));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

/// Mean and variance accumulator (Welford, merged with Chan's update).
struct RunningStats {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }

  void merge(const RunningStats& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const std::int64_t total = n + o.n;
    const double d = o.mean - mean;
    mean += d * double(o.n) / total;
    m2 += o.m2 + d * d * double(n) * double(o.n) / total;
    n = total;
  }

  double variance() const { return n > 1 ? m2 / (n - 1) : 0.0; }
  double stderr_of_mean() const { return n > 0 ? std::sqrt(variance() / n) : 0.0; }
};

}  // namespace beamforge
