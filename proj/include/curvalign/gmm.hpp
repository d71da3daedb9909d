#pragma once

// One-dimensional Gaussian mixtures fitted by EM, with the component count
// chosen by BIC = -2 log L + p ln n, p = 3k - 1.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "curvalign/error.hpp"
#include "curvalign/random.hpp"
#include "curvalign/report.hpp"

namespace curvalign {

struct GmmOptions {
  double tolerance = 1e-7;        // on the mean per-sample log-likelihood
  std::size_t max_iterations = 500;
  double variance_floor = 1e-6;
};

struct GmmFit {
  std::size_t n_components = 0;
  std::vector<double> weights;  // sorted by descending weight
  std::vector<double> means;
  std::vector<double> variances;
  double log_likelihood = 0.0;
  double bic = 0.0;
  bool converged = false;
  bool degenerate = false;  // every sample identical
  std::size_t n_iter_used = 0;
  std::vector<double> log_likelihood_trace;  // total log L after each E-step
};

inline double gmm_bic(double log_likelihood, std::size_t k, std::size_t n) {
  return -2.0 * log_likelihood + static_cast<double>(3 * k - 1) * std::log(static_cast<double>(n));
}

namespace detail {

inline double log_normal_pdf(double x, double mean, double var) {
  const double z = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + z * z / var);
}

inline double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Total log-likelihood; fills responsibilities (n x k, row-major) if given.
inline double e_step(std::span<const double> x, const GmmFit& fit, std::vector<double>* resp) {
  const std::size_t k = fit.n_components;
  std::vector<double> lp(k);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t c = 0; c < k; ++c)
      lp[c] = std::log(fit.weights[c]) + log_normal_pdf(x[i], fit.means[c], fit.variances[c]);
    const double norm = log_sum_exp(lp);
    total += norm;
    if (resp)
      for (std::size_t c = 0; c < k; ++c) (*resp)[i * k + c] = std::exp(lp[c] - norm);
  }
  return total;
}

inline void sort_components(GmmFit& fit) {
  std::vector<std::size_t> order(fit.n_components);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fit.weights[a] != fit.weights[b] ? fit.weights[a] > fit.weights[b]
                                            : fit.means[a] < fit.means[b];
  });
  GmmFit sorted = fit;
  for (std::size_t c = 0; c < order.size(); ++c) {
    sorted.weights[c] = fit.weights[order[c]];
    sorted.means[c] = fit.means[order[c]];
    sorted.variances[c] = fit.variances[order[c]];
  }
  fit = std::move(sorted);
}

// k-means++ seeding on the sorted sample, so the result does not depend on
// the order the samples were supplied in.
inline std::vector<double> kmeans_pp_centers(std::span<const double> sorted, std::size_t k, Rng& rng) {
  std::vector<double> centers;
  centers.push_back(sorted[uniform_index(rng, sorted.size())]);
  std::vector<double> d2(sorted.size());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centers) best = std::min(best, (sorted[i] - c) * (sorted[i] - c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      centers.push_back(sorted[uniform_index(rng, sorted.size())]);
      continue;
    }
    double r = uniform01(rng) * total;
    std::size_t pick = sorted.size() - 1;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      r -= d2[i];
      if (r < 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(sorted[pick]);
  }
  return centers;
}

}  // namespace detail

inline GmmFit fit_gmm(std::span<const double> samples, std::size_t k, std::uint64_t seed,
                      const GmmOptions& options = {}) {
  if (k < 1) throw ValidationError("need at least one component");
  if (samples.size() < 2 * k)
    throw TooFewSamples("fitting " + std::to_string(k) + " components needs at least " +
                        std::to_string(2 * k) + " samples, got " + std::to_string(samples.size()));
  for (double v : samples)
    if (!std::isfinite(v)) throw ValidationError("samples must be finite");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);

  GmmFit fit;
  fit.n_components = k;
  if (x.front() == x.back()) {
    fit.n_components = 1;
    fit.weights = {1.0};
    fit.means = {x.front()};
    fit.variances = {options.variance_floor};
    fit.degenerate = true;
    fit.converged = true;
    fit.log_likelihood = detail::e_step(x, fit, nullptr);
    fit.log_likelihood_trace = {fit.log_likelihood};
    fit.bic = gmm_bic(fit.log_likelihood, 1, n);
    return fit;
  }

  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / nd;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var = std::max(var / nd, options.variance_floor);

  if (k == 1) {
    fit.weights = {1.0};
    fit.means = {mean};
    fit.variances = {var};
    fit.converged = true;
    fit.log_likelihood = detail::e_step(x, fit, nullptr);
    fit.log_likelihood_trace = {fit.log_likelihood};
    fit.bic = gmm_bic(fit.log_likelihood, 1, n);
    return fit;
  }

  // Initialise from k-means++ centres with hard assignments.
  Rng rng(seed);
  fit.means = detail::kmeans_pp_centers(x, k, rng);
  fit.weights.assign(k, 0.0);
  fit.variances.assign(k, 0.0);
  {
    std::vector<double> sum(k, 0.0), sq(k, 0.0), count(k, 0.0);
    for (double v : x) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c)
        if (std::abs(v - fit.means[c]) < std::abs(v - fit.means[best])) best = c;
      count[best] += 1.0;
      sum[best] += v;
    }
    for (std::size_t c = 0; c < k; ++c)
      if (count[c] > 0.0) fit.means[c] = sum[c] / count[c];
    for (double v : x) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c)
        if (std::abs(v - fit.means[c]) < std::abs(v - fit.means[best])) best = c;
      sq[best] += (v - fit.means[best]) * (v - fit.means[best]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      fit.weights[c] = std::max(count[c], 1.0) / (nd + static_cast<double>(k));
      fit.variances[c] = count[c] > 1.0 ? std::max(sq[c] / count[c], options.variance_floor) : var;
    }
    const double wsum = std::accumulate(fit.weights.begin(), fit.weights.end(), 0.0);
    for (double& w : fit.weights) w /= wsum;
  }

  std::vector<double> resp(n * k);
  double prev = detail::e_step(x, fit, &resp);
  fit.log_likelihood_trace.push_back(prev);
  for (std::size_t iter = 1; iter <= options.max_iterations; ++iter) {
    // M-step
    for (std::size_t c = 0; c < k; ++c) {
      double nk = 0.0, s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * k + c];
        s += resp[i * k + c] * x[i];
      }
      nk = std::max(nk, 10.0 * std::numeric_limits<double>::epsilon());
      const double mu = s / nk;
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += resp[i * k + c] * (x[i] - mu) * (x[i] - mu);
      fit.weights[c] = nk / nd;
      fit.means[c] = mu;
      fit.variances[c] = std::max(v / nk, options.variance_floor);
    }
    const double wsum = std::accumulate(fit.weights.begin(), fit.weights.end(), 0.0);
    for (double& w : fit.weights) w /= wsum;

    const double ll = detail::e_step(x, fit, &resp);
    fit.log_likelihood_trace.push_back(ll);
    fit.n_iter_used = iter;
    if ((ll - prev) / nd < options.tolerance) {
      fit.converged = true;
      prev = ll;
      break;
    }
    prev = ll;
  }
  fit.log_likelihood = prev;
  fit.bic = gmm_bic(fit.log_likelihood, k, n);
  detail::sort_components(fit);
  return fit;
}

struct GmmSelection {
  GmmFit best;
  std::vector<GmmFit> candidates;  // best restart for each k tried
};

// Fits k = 1..k_max (k_max truncated so every fit has 2k samples), best of
// `restarts` seeds per k, and keeps the lowest BIC; ties go to smaller k.
inline GmmSelection select_gmm(std::span<const double> samples, std::size_t k_max,
                               std::uint64_t seed, std::size_t restarts = 5,
                               const GmmOptions& options = {}) {
  if (k_max < 1) throw ValidationError("k_max must be >= 1");
  if (samples.size() < 2) throw TooFewSamples("GMM selection needs at least 2 samples");
  const std::size_t k_top = std::min(k_max, samples.size() / 2);
  GmmSelection out;
  for (std::size_t k = 1; k <= k_top; ++k) {
    GmmFit best;
    bool have = false;
    const std::size_t tries = k == 1 ? 1 : restarts;
    for (std::size_t r = 0; r < tries; ++r) {
      GmmFit fit = fit_gmm(samples, k, child_seed(child_seed(seed, k), r), options);
      if (!have || fit.log_likelihood > best.log_likelihood) {
        best = std::move(fit);
        have = true;
      }
    }
    out.candidates.push_back(std::move(best));
    if (out.candidates.back().degenerate) break;
  }
  out.best = out.candidates.front();
  for (const auto& c : out.candidates)
    if (c.bic < out.best.bic) out.best = c;
  return out;
}

inline Json gmm_to_json(const GmmFit& fit) {
  return {{"k", fit.n_components},       {"bic", fit.bic},
          {"weights", fit.weights},      {"means", fit.means},
          {"variances", fit.variances},  {"converged", fit.converged},
          {"log_likelihood", fit.log_likelihood}, {"n_iter", fit.n_iter_used},
          {"degenerate", fit.degenerate}};
}

}  // namespace curvalign
