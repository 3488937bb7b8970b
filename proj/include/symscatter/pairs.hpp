// Pairwise-difference designs: all pairs, the circulant ("balanced") subset
// (i, i+j mod n) for j <= d, and cycles of random permutations. Also the
// cycle-representation coupling of a uniform permutation with a single-cycle
// permutation, used by the statistical test machinery.
//
// Index pairs are 1-based throughout, matching the CSV interchange format.
// Streams are emitted in a frozen deterministic order (i-major, then j);
// consumers must not rely on the order for correctness.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "symscatter/errors.hpp"
#include "symscatter/linalg.hpp"
#include "symscatter/rng.hpp"

namespace symscatter {

// n observations of dimension q, one per row.
struct Dataset {
  Matrix rows;

  explicit Dataset(Matrix r);
  int n() const { return static_cast<int>(rows.rows()); }
  int q() const { return static_cast<int>(rows.cols()); }
};

struct IndexPair {
  int i = 0;
  int j = 0;
  friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

struct PairScheme {
  enum class Kind { Complete, Balanced, RandomizedCycles };

  Kind kind = Kind::Complete;
  int d = 0;                 // Balanced / RandomizedCycles
  std::uint64_t seed = 0;    // RandomizedCycles

  static PairScheme complete() { return {Kind::Complete, 0, 0}; }
  static PairScheme balanced(int d) { return {Kind::Balanced, d, 0}; }
  static PairScheme randomized_cycles(int d, std::uint64_t seed) {
    return {Kind::RandomizedCycles, d, seed};
  }
};

// Bijection of {1, ..., n}.
class Permutation {
 public:
  explicit Permutation(std::vector<int> images);
  static Permutation identity(int n);

  int size() const { return static_cast<int>(images_.size()); }
  int operator()(int i) const { return images_[static_cast<size_t>(i) - 1]; }
  const std::vector<int>& images() const { return images_; }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<int> images_;
};

using PairFn = std::function<void(int i, int j)>;

void for_each_complete_pair(int n, const PairFn& fn);
void for_each_balanced_pair(int n, int d, const PairFn& fn);
void for_each_pair(const PairScheme& scheme, int n, const PairFn& fn);

std::vector<IndexPair> complete_pairs(int n);
std::vector<IndexPair> balanced_pairs(int n, int d);
std::vector<IndexPair> scheme_pairs(const PairScheme& scheme, int n);
long pair_count(const PairScheme& scheme, int n);

// Validates the scheme against the sample size; throws on violation
// (Balanced/RandomizedCycles need 1 <= d <= (n-1)/2, RandomizedCycles n >= 3).
void validate_scheme(const PairScheme& scheme, int n);

// Fisher-Yates shuffle; exactly uniform over all n! permutations.
Permutation sample_permutation(int n, Rng& rng);

// The n pairs (p(i), p(i+1)) with p(n+1) := p(1); distinct for n >= 3.
std::vector<IndexPair> cycle_pairs(const Permutation& p);

// The d cycle permutations a RandomizedCycles(d, seed) scheme draws.
std::vector<Permutation> draw_cycle_permutations(int n, int d,
                                                 std::uint64_t seed);

struct CoupledPermutations {
  Permutation sigma;       // uniform when the input is uniform
  Permutation sigma_star;  // the single cycle (p(1), ..., p(n))
  std::vector<int> cut_points;  // positions i with p(i) = min of remaining
};

// Record-minima segmentation of p: cut after each position whose image is
// the minimum of the values not yet used; each segment becomes one cycle of
// sigma. p -> sigma is a bijection, and sigma and sigma_star differ exactly
// on the cut points (nowhere if there is a single segment).
CoupledPermutations couple_permutation(const Permutation& p);

int disagreement_count(const Permutation& a, const Permutation& b);

// One difference X_j - X_i per emitted pair, in stream order.
Matrix pair_differences(const Dataset& data, const PairScheme& scheme);

}  // namespace symscatter
