#include "hydrobalance/routing.hpp"

#include <bit>
#include <cmath>

namespace hydrobalance {

RankLaw rank_law(std::size_t n, int ell, Replacement replacement) {
  if (n == 0) throw std::invalid_argument("rank_law: n must be positive");
  if (ell < 2) throw std::invalid_argument("rank_law: ell must be at least 2");
  if (replacement == Replacement::without && static_cast<std::size_t>(ell) > n) {
    throw std::invalid_argument("rank_law: ell > n without replacement");
  }
  RankLaw law{n, ell, replacement, std::vector<double>(n, 0.0)};
  const double dn = static_cast<double>(n);
  if (replacement == Replacement::without) {
    // p_r = (ell/n) * prod_{k=1}^{ell-1} (n-r-k+1)/(n-k), zero for r > n-ell+1.
    const std::size_t last = n - static_cast<std::size_t>(ell) + 1;
    for (std::size_t r = 1; r <= last; ++r) {
      double p = ell / dn;
      for (int k = 1; k < ell; ++k) {
        p *= static_cast<double>(n - r - static_cast<std::size_t>(k) + 1) / static_cast<double>(n - static_cast<std::size_t>(k));
      }
      law.probs[r - 1] = p;
    }
  } else {
    for (std::size_t r = 1; r <= n; ++r) {
      law.probs[r - 1] = std::pow((dn - r + 1) / dn, ell) - std::pow((dn - r) / dn, ell);
    }
  }
  return law;
}

void sample_without_replacement(std::size_t n, int ell, Rng& rng, std::vector<std::size_t>& out) {
  const auto m = static_cast<std::size_t>(ell);
  if (m > n) throw std::invalid_argument("sample_without_replacement: ell > n");
  out.clear();
  for (std::size_t j = n - m; j < n; ++j) {
    std::size_t t = rng.uniform_index(j + 1);
    if (std::find(out.begin(), out.end(), t) != out.end()) t = j;
    out.push_back(t);
  }
}

namespace {

using Count = unsigned __int128;

bool better(std::span<const double> x, std::size_t a, std::size_t b) {
  return x[a] < x[b] || (x[a] == x[b] && a < b);
}

std::uint64_t ipow(std::uint64_t base, int e) {
  std::uint64_t r = 1;
  for (int k = 0; k < e; ++k) r *= base;
  return r;
}

// Number of maps from an ell-set onto a k-set, by inclusion-exclusion.
Count surjections(int ell, int k) {
  __int128 total = 0;
  __int128 binom = 1;
  for (int j = 0; j <= k; ++j) {
    const __int128 term = binom * static_cast<__int128>(ipow(static_cast<std::uint64_t>(k - j), ell));
    total += (j % 2 == 0) ? term : -term;
    binom = binom * (k - j) / (j + 1);
  }
  return static_cast<Count>(total);
}

}  // namespace

std::vector<double> enumerate_selection_law(std::span<const double> x, int ell, Replacement replacement) {
  const std::size_t n = x.size();
  if (n == 0 || n > 12) throw std::invalid_argument("enumerate_selection_law: need 1 <= n <= 12");
  if (ell < 1) throw std::invalid_argument("enumerate_selection_law: ell must be positive");
  if (replacement == Replacement::without && static_cast<std::size_t>(ell) > n) {
    throw std::invalid_argument("enumerate_selection_law: ell > n without replacement");
  }
  std::vector<Count> hits(n, 0);
  Count total = 0;

  auto winner_of_mask = [&](unsigned mask) {
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j) {
      if ((mask >> j) & 1u) {
        if (best == n || better(x, j, best)) best = j;
      }
    }
    return best;
  };

  if (replacement == Replacement::without) {
    // Every ell-subset is equally likely.
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if (std::popcount(mask) != ell) continue;
      ++hits[winner_of_mask(mask)];
      ++total;
    }
  } else if (std::pow(static_cast<double>(n), ell) <= 4.0e6) {
    // Every ordered ell-tuple is equally likely; walk them all.
    std::vector<std::size_t> tuple(static_cast<std::size_t>(ell), 0);
    while (true) {
      std::size_t best = tuple[0];
      for (std::size_t j : tuple) {
        if (better(x, j, best)) best = j;
      }
      ++hits[best];
      ++total;
      int pos = 0;
      while (pos < ell && ++tuple[static_cast<std::size_t>(pos)] == n) tuple[static_cast<std::size_t>(pos++)] = 0;
      if (pos == ell) break;
    }
  } else {
    // Group tuples by the set of distinct indices they hit: a k-set S is hit
    // by exactly surj(ell, k) tuples, and the winner is determined by S.
    std::vector<Count> by_size(n + 1, 0);
    for (std::size_t k = 1; k <= n; ++k) by_size[k] = surjections(ell, static_cast<int>(k));
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      const auto k = static_cast<std::size_t>(std::popcount(mask));
      if (k > static_cast<std::size_t>(ell)) continue;
      hits[winner_of_mask(mask)] += by_size[k];
      total += by_size[k];
    }
  }
  std::vector<double> probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] = static_cast<double>(static_cast<long double>(hits[i]) / static_cast<long double>(total));
  }
  return probs;
}

}  // namespace hydrobalance
