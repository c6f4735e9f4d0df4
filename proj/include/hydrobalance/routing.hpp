#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "hydrobalance/params.hpp"
#include "hydrobalance/rng.hpp"

// Queue indices are 0-based throughout; ranks are 1-based counts in [1, n].

namespace hydrobalance {

/// Probability that a power-of-choice arrival joins the queue of rank r.
struct RankLaw {
  std::size_t n = 0;
  int ell = 2;
  Replacement replacement = Replacement::without;
  std::vector<double> probs;  ///< probs[r - 1]

  double operator()(std::size_t r) const { return probs.at(r - 1); }
};

/// rank(i; x) = #{j : x_j < x_i} + #{j <= i : x_j == x_i}.
template <typename T>
std::size_t rank(std::size_t i, std::span<const T> x) {
  if (i >= x.size()) throw std::out_of_range("rank: index out of range");
  std::size_t r = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < x[i] || (x[j] == x[i] && j <= i)) ++r;
  }
  return r;
}

template <typename T>
std::vector<std::size_t> ranks(std::span<const T> x) {
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<std::size_t> r(x.size());
  for (std::size_t k = 0; k < order.size(); ++k) r[order[k]] = k + 1;
  return r;
}

RankLaw rank_law(std::size_t n, int ell, Replacement replacement);

/// ell distinct indices from [0, n) by Floyd's algorithm.
void sample_without_replacement(std::size_t n, int ell, Rng& rng, std::vector<std::size_t>& out);

/// Power-of-choice draw: sample ell queues, return the one with the smallest
/// value, ties to the smaller index.
template <typename T>
std::size_t select_direct(std::span<const T> x, int ell, Replacement replacement, Rng& rng) {
  const std::size_t n = x.size();
  std::size_t best = n;
  auto consider = [&](std::size_t j) {
    if (best == n || x[j] < x[best] || (x[j] == x[best] && j < best)) best = j;
  };
  if (replacement == Replacement::with) {
    for (int k = 0; k < ell; ++k) consider(rng.uniform_index(n));
  } else {
    // Floyd's algorithm, inlined to avoid scratch allocation.
    const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(ell), n);
    std::size_t chosen[64];
    std::vector<std::size_t> heap_chosen;
    std::size_t* picked = chosen;
    if (m > 64) {
      heap_chosen.resize(m);
      picked = heap_chosen.data();
    }
    std::size_t count = 0;
    for (std::size_t j = n - m; j < n; ++j) {
      std::size_t t = rng.uniform_index(j + 1);
      if (std::find(picked, picked + count, t) != picked + count) t = j;
      picked[count++] = t;
      consider(t);
    }
  }
  return best;
}

/// Draws a rank from `law` and returns the index holding that rank in x.
template <typename T>
std::size_t select_by_rank(std::span<const T> x, const RankLaw& law, Rng& rng) {
  if (law.n != x.size()) throw std::invalid_argument("select_by_rank: law size mismatch");
  const double u = rng.uniform01();
  std::size_t theta = law.n;
  double acc = 0.0;
  for (std::size_t r = 0; r < law.n; ++r) {
    acc += law.probs[r];
    if (u < acc) {
      theta = r + 1;
      break;
    }
  }
  if (theta == law.n) {
    // Rounding slack in the cumulative sum: fall back to the last positive rank.
    while (theta > 1 && law.probs[theta - 1] == 0.0) --theta;
  }
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(theta - 1), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b] || (x[a] == x[b] && a < b); });
  return order[theta - 1];
}

/// Exact selection probabilities of select_direct, by exhaustive enumeration
/// of the sampled sets. Counts are accumulated in integers and divided once.
/// Limits: n <= 12.
std::vector<double> enumerate_selection_law(std::span<const double> x, int ell, Replacement replacement);

}  // namespace hydrobalance
