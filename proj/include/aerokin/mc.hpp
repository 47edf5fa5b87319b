#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

#include "aerokin/rng.hpp"

namespace aerokin {

struct McEstimate {
  std::vector<double> mean;
  std::vector<double> stderr_;  // standard error of the mean, per component
  std::uint64_t n_samples = 0;
};

inline int worker_count(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("AEROKIN_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

/// Block-deterministic Monte Carlo driver. The sample space is split into
/// fixed blocks; block b draws from RngStream::derived(seed, b) and blocks
/// are reduced in index order, so the result is bit-identical for any
/// worker count.
template <class F>
McEstimate mc_run(std::uint64_t seed, std::uint64_t n_samples, int dim, F&& sample_fn,
                  int workers = 0) {
  constexpr std::uint64_t kBlock = 16384;
  const std::uint64_t n_blocks = (n_samples + kBlock - 1) / kBlock;
  std::vector<std::vector<double>> block_sum(n_blocks), block_sum2(n_blocks);

  const int nw = worker_count(workers);
  std::atomic<std::uint64_t> next{0};
  auto work = [&]() {
    std::vector<double> val(dim);
    for (;;) {
      const std::uint64_t b = next.fetch_add(1);
      if (b >= n_blocks) break;
      RngStream rng = RngStream::derived(seed, b);
      const std::uint64_t lo = b * kBlock;
      const std::uint64_t hi = std::min(n_samples, lo + kBlock);
      std::vector<double> s(dim, 0.0), s2(dim, 0.0);
      for (std::uint64_t i = lo; i < hi; ++i) {
        sample_fn(rng, val);
        for (int d = 0; d < dim; ++d) {
          s[d] += val[d];
          s2[d] += val[d] * val[d];
        }
      }
      block_sum[b] = std::move(s);
      block_sum2[b] = std::move(s2);
    }
  };

  if (nw <= 1 || n_blocks <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nw; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  McEstimate est;
  est.n_samples = n_samples;
  est.mean.assign(dim, 0.0);
  est.stderr_.assign(dim, 0.0);
  std::vector<double> sum(dim, 0.0), sum2(dim, 0.0);
  for (std::uint64_t b = 0; b < n_blocks; ++b) {
    for (int d = 0; d < dim; ++d) {
      sum[d] += block_sum[b][d];
      sum2[d] += block_sum2[b][d];
    }
  }
  const double n = double(n_samples);
  for (int d = 0; d < dim; ++d) {
    est.mean[d] = sum[d] / n;
    double var = std::max(0.0, sum2[d] / n - est.mean[d] * est.mean[d]);
    est.stderr_[d] = std::sqrt(var / n);
  }
  return est;
}

}  // namespace aerokin
