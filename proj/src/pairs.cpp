#include "symscatter/pairs.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace symscatter {

Dataset::Dataset(Matrix r) : rows(std::move(r)) {
  if (rows.rows() < 2) {
    throw Error("Dataset requires n >= 2 observations");
  }
  if (rows.cols() < 1) {
    throw Error("Dataset requires q >= 1");
  }
  if (!rows.allFinite()) {
    throw Error("Dataset contains non-finite entries");
  }
}

Permutation::Permutation(std::vector<int> images) : images_(std::move(images)) {
  std::vector<int> sorted = images_;
  std::sort(sorted.begin(), sorted.end());
  for (size_t k = 0; k < sorted.size(); ++k) {
    if (sorted[k] != static_cast<int>(k) + 1) {
      throw Error("Permutation images must be a bijection of {1, ..., n}");
    }
  }
}

Permutation Permutation::identity(int n) {
  std::vector<int> images(static_cast<size_t>(n));
  std::iota(images.begin(), images.end(), 1);
  return Permutation(std::move(images));
}

void validate_scheme(const PairScheme& scheme, int n) {
  if (n < 2) throw Error("pair schemes require n >= 2");
  switch (scheme.kind) {
    case PairScheme::Kind::Complete:
      return;
    case PairScheme::Kind::Balanced:
      if (scheme.d < 1 || 2 * scheme.d > n - 1) {
        throw Error("balanced scheme requires 1 <= d <= (n-1)/2, got d=" +
                    std::to_string(scheme.d) + ", n=" + std::to_string(n));
      }
      return;
    case PairScheme::Kind::RandomizedCycles:
      if (n < 3) throw Error("randomized cycles require n >= 3");
      if (scheme.d < 1) throw Error("randomized cycles require d >= 1");
      return;
  }
}

void for_each_complete_pair(int n, const PairFn& fn) {
  if (n < 2) throw Error("complete pairs require n >= 2");
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) fn(i, j);
  }
}

void for_each_balanced_pair(int n, int d, const PairFn& fn) {
  validate_scheme(PairScheme::balanced(d), n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= d; ++j) {
      int k = i + j;
      if (k > n) k -= n;  // X_{n+s} := X_s
      fn(i, k);
    }
  }
}

std::vector<Permutation> draw_cycle_permutations(int n, int d,
                                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Permutation> out;
  out.reserve(static_cast<size_t>(d));
  for (int l = 0; l < d; ++l) out.push_back(sample_permutation(n, rng));
  return out;
}

void for_each_pair(const PairScheme& scheme, int n, const PairFn& fn) {
  validate_scheme(scheme, n);
  switch (scheme.kind) {
    case PairScheme::Kind::Complete:
      for_each_complete_pair(n, fn);
      return;
    case PairScheme::Kind::Balanced:
      for_each_balanced_pair(n, scheme.d, fn);
      return;
    case PairScheme::Kind::RandomizedCycles: {
      for (const Permutation& p : draw_cycle_permutations(n, scheme.d,
                                                          scheme.seed)) {
        for (const IndexPair& pr : cycle_pairs(p)) fn(pr.i, pr.j);
      }
      return;
    }
  }
}

std::vector<IndexPair> complete_pairs(int n) {
  return scheme_pairs(PairScheme::complete(), n);
}

std::vector<IndexPair> balanced_pairs(int n, int d) {
  return scheme_pairs(PairScheme::balanced(d), n);
}

std::vector<IndexPair> scheme_pairs(const PairScheme& scheme, int n) {
  std::vector<IndexPair> out;
  out.reserve(static_cast<size_t>(pair_count(scheme, n)));
  for_each_pair(scheme, n, [&out](int i, int j) { out.push_back({i, j}); });
  return out;
}

long pair_count(const PairScheme& scheme, int n) {
  validate_scheme(scheme, n);
  switch (scheme.kind) {
    case PairScheme::Kind::Complete:
      return static_cast<long>(n) * (n - 1) / 2;
    case PairScheme::Kind::Balanced:
    case PairScheme::Kind::RandomizedCycles:
      return static_cast<long>(n) * scheme.d;
  }
  return 0;
}

Permutation sample_permutation(int n, Rng& rng) {
  if (n < 1) throw Error("sample_permutation requires n >= 1");
  std::vector<int> images(static_cast<size_t>(n));
  std::iota(images.begin(), images.end(), 1);
  for (int i = n - 1; i >= 1; --i) {
    const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(images[static_cast<size_t>(i)], images[static_cast<size_t>(j)]);
  }
  return Permutation(std::move(images));
}

std::vector<IndexPair> cycle_pairs(const Permutation& p) {
  const int n = p.size();
  if (n < 3) throw Error("cycle_pairs requires n >= 3");
  std::vector<IndexPair> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 1; i <= n; ++i) {
    const int a = p(i);
    const int b = (i == n) ? p(1) : p(i + 1);
    out.push_back({a, b});
  }
  return out;
}

CoupledPermutations couple_permutation(const Permutation& p) {
  const int n = p.size();
  // remaining[v] == true while v has not yet appeared among p(1), ..., p(i-1)
  std::vector<bool> remaining(static_cast<size_t>(n) + 1, true);
  int current_min = 1;
  std::vector<int> cuts;
  for (int i = 1; i <= n; ++i) {
    while (!remaining[static_cast<size_t>(current_min)]) ++current_min;
    if (p(i) == current_min) cuts.push_back(i);
    remaining[static_cast<size_t>(p(i))] = false;
  }
  // cuts is nonempty and ends at n: p(n) is the only remaining value there.

  std::vector<int> sigma(static_cast<size_t>(n));
  int start = 1;
  for (const int cut : cuts) {
    for (int t = start; t < cut; ++t) {
      sigma[static_cast<size_t>(p(t)) - 1] = p(t + 1);
    }
    sigma[static_cast<size_t>(p(cut)) - 1] = p(start);
    start = cut + 1;
  }

  std::vector<int> sigma_star(static_cast<size_t>(n));
  for (int i = 1; i <= n; ++i) {
    sigma_star[static_cast<size_t>(p(i)) - 1] = (i == n) ? p(1) : p(i + 1);
  }

  return {Permutation(std::move(sigma)), Permutation(std::move(sigma_star)),
          std::move(cuts)};
}

int disagreement_count(const Permutation& a, const Permutation& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("disagreement_count: size mismatch");
  }
  int count = 0;
  for (int i = 1; i <= a.size(); ++i) {
    if (a(i) != b(i)) ++count;
  }
  return count;
}

Matrix pair_differences(const Dataset& data, const PairScheme& scheme) {
  const int n = data.n();
  validate_scheme(scheme, n);
  Matrix diffs(pair_count(scheme, n), data.q());
  Eigen::Index row = 0;
  for_each_pair(scheme, n, [&](int i, int j) {
    diffs.row(row++) = data.rows.row(j - 1) - data.rows.row(i - 1);
  });
  return diffs;
}

}  // namespace symscatter
