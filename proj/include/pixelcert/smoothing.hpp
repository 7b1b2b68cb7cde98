// Monte-Carlo estimation and per-pixel certification of the smoothed
// sparsified attribution. Noisy inputs are never clipped back to [0,1]: the
// certificate's Gaussian smoothing argument assumes unconstrained additive
// noise. Sampling is reproducible for any worker count because sample j
// always draws its noise from stream (master_seed, j) and votes add
// commutatively.
#pragma once

#include <cstdio>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "pixelcert/attribution.hpp"
#include "pixelcert/rng.hpp"
#include "pixelcert/sparsify.hpp"
#include "pixelcert/stats.hpp"
#include "pixelcert/types.hpp"

namespace pixelcert {

// Certified l2 radius sigma * Phi^-1(tau).
inline double radius(double sigma, double tau) {
  if (!(sigma > 0.0)) throw std::domain_error("radius: sigma must be > 0");
  if (!(tau >= 0.5 && tau < 1.0)) throw std::domain_error("radius: tau must be in [0.5, 1)");
  if (tau == 0.5) return 0.0;
  return sigma * inv_norm_cdf(tau);
}

// Vote counts for several sparsification levels from one shared set of noisy
// samples. k_list entries must each be in (0, 100].
inline std::vector<VoteTensor> sample_votes_multi(const AttributionRequest& attr_fn,
                                                  const ImageTensor& x,
                                                  const SmoothingConfig& cfg,
                                                  std::span<const double> k_list,
                                                  int jobs = 1) {
  cfg.validate();
  x.validate();
  if (k_list.empty()) throw std::invalid_argument("sample_votes_multi: empty k_list");
  for (double k : k_list) RankRule{k}.validate();
  if (jobs < 1) jobs = 1;
  jobs = std::min<int>(jobs, cfg.n_samples);

  const int n_pixels = x.pixel_count();
  const std::size_t n_k = k_list.size();

  struct WorkerResult {
    std::vector<std::vector<int>> counts;  // [k][pixel]
    std::string error;
  };
  std::vector<WorkerResult> results(static_cast<std::size_t>(jobs));

  auto run_range = [&](int first, int last, WorkerResult& out) {
    out.counts.assign(n_k, std::vector<int>(static_cast<std::size_t>(n_pixels), 0));
    ImageTensor noisy = x;
    for (int j = first; j < last; ++j) {
      RngStream noise(cfg.master_seed, static_cast<std::uint64_t>(j));
      for (std::size_t i = 0; i < x.data.size(); ++i)
        noisy.data[i] = x.data[i] + cfg.sigma * noise.normal();
      AttributionMap map;
      try {
        map = attribute(attr_fn, noisy);
      } catch (const std::exception& e) {
        out.error = "attribution failed on sample " + std::to_string(j) + ": " + e.what();
        return;
      }
      for (std::size_t ki = 0; ki < n_k; ++ki) {
        const SparsifiedMap s = sparsify(map, {k_list[ki]});
        for (int i = 0; i < n_pixels; ++i) out.counts[ki][i] += s.bits[i];
      }
    }
  };

  if (jobs == 1) {
    run_range(0, cfg.n_samples, results[0]);
  } else {
    std::vector<std::thread> workers;
    for (int t = 0; t < jobs; ++t) {
      const int first = static_cast<int>(static_cast<long long>(cfg.n_samples) * t / jobs);
      const int last = static_cast<int>(static_cast<long long>(cfg.n_samples) * (t + 1) / jobs);
      workers.emplace_back(run_range, first, last, std::ref(results[t]));
    }
    for (std::thread& w : workers) w.join();
  }

  for (const WorkerResult& r : results)
    if (!r.error.empty()) throw std::runtime_error(r.error);

  std::vector<VoteTensor> votes(n_k);
  for (std::size_t ki = 0; ki < n_k; ++ki) {
    VoteTensor& v = votes[ki];
    v.height = x.height;
    v.width = x.width;
    v.n_samples = cfg.n_samples;
    v.counts_one.assign(static_cast<std::size_t>(n_pixels), 0);
    for (const WorkerResult& r : results)
      if (!r.counts.empty())
        for (int i = 0; i < n_pixels; ++i) v.counts_one[i] += r.counts[ki][i];
  }
  return votes;
}

inline VoteTensor sample_votes(const AttributionRequest& attr_fn, const ImageTensor& x,
                               const SmoothingConfig& cfg, int jobs = 1) {
  const double k = cfg.k_percent;
  return std::move(sample_votes_multi(attr_fn, x, cfg, std::span<const double>(&k, 1), jobs)[0]);
}

// Per-pixel decision from the vote counts. A pixel is certified ONE (top-K)
// when its one-votes reach the exact binomial threshold at the corrected
// per-test level, ZERO symmetrically, and abstained otherwise. Holm applies
// the step-down schedule alpha/(N-rank) over the sorted per-pixel p-values.
inline CertifiedMap certify(const VoteTensor& votes, const SmoothingConfig& cfg) {
  cfg.validate();
  votes.validate();
  if (votes.n_samples != cfg.n_samples)
    throw std::invalid_argument("certify: votes/config n_samples mismatch");

  const int n = cfg.n_samples;
  const int n_pixels = votes.pixel_count();

  CertifiedMap out;
  out.height = votes.height;
  out.width = votes.width;
  out.radius = radius(cfg.sigma, cfg.tau);
  out.tau = cfg.tau;
  out.alpha = cfg.alpha;
  out.k_percent = cfg.k_percent;
  out.n_samples = n;
  out.counts_one = votes.counts_one;
  out.labels.assign(static_cast<std::size_t>(n_pixels), PixelLabel::kAbstain);

  const double alpha_floor = fwer_alpha(cfg.alpha, n_pixels, cfg.correction);
  if (certify_threshold(n, cfg.tau, alpha_floor) == n + 1) {
    std::fprintf(stderr,
                 "pixelcert: warning: n=%d samples cannot reach significance at "
                 "tau=%g, alpha=%g over %d pixels; abstaining everywhere\n",
                 n, cfg.tau, cfg.alpha, n_pixels);
    return out;
  }

  if (cfg.correction == Correction::kBonferroni) {
    const int threshold = certify_threshold(n, cfg.tau, alpha_floor);
    for (int i = 0; i < n_pixels; ++i) {
      if (votes.counts_one[i] >= threshold)
        out.labels[i] = PixelLabel::kOne;
      else if (n - votes.counts_one[i] >= threshold)
        out.labels[i] = PixelLabel::kZero;
    }
    return out;
  }

  // Holm step-down: sort pixels by the p-value of their majority class.
  std::vector<double> pvals(static_cast<std::size_t>(n_pixels));
  for (int i = 0; i < n_pixels; ++i) {
    const int top = std::max(votes.counts_one[i], n - votes.counts_one[i]);
    pvals[i] = binom_sf(top, n, cfg.tau);
  }
  std::vector<int> order(static_cast<std::size_t>(n_pixels));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (pvals[a] != pvals[b]) return pvals[a] < pvals[b];
    return a < b;
  });
  for (int rank = 0; rank < n_pixels; ++rank) {
    const int i = order[rank];
    if (pvals[i] > cfg.alpha / (n_pixels - rank)) break;
    if (votes.counts_one[i] > n - votes.counts_one[i])
      out.labels[i] = PixelLabel::kOne;
    else if (votes.counts_one[i] < n - votes.counts_one[i])
      out.labels[i] = PixelLabel::kZero;
    // exact tie stays abstained; its p-value cannot be significant anyway
  }
  return out;
}

}  // namespace pixelcert
