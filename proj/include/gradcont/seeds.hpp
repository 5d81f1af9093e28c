#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gradcont/explorer.hpp"
#include "gradcont/staged_system.hpp"

namespace gradcont {

// A multiplicity pattern: 5 positive integers sorted descending whose sum is
// n.  Each entry i[k] is the multiplicity of one of the 5 distinct values a
// stage-0 stationary point takes.  Construction helpers do not enforce the
// at-most-one-odd-entry rule (the reduced system below is well defined for
// any pattern); enumerate_patterns and symmetric_arrangements do, because a
// mirror-symmetric assignment exists only when at most one multiplicity is
// odd.
struct Pattern {
  std::array<int, 5> i{};

  int n() const { return i[0] + i[1] + i[2] + i[3] + i[4]; }
  // offsets()[k] = i[0] + ... + i[k-1] (block start of value k).
  std::array<int, 5> offsets() const;
  int odd_count() const;
  // Index of the unique odd entry; -1 when none, smallest when several.
  int odd_index() const;

  friend bool operator==(const Pattern&, const Pattern&) = default;
};

// All patterns for odd n >= 9: sorted descending, positive, sum n, at most
// one odd entry.  Listing order is lexicographically decreasing.  Throws
// std::invalid_argument for even or too-small n.
std::vector<Pattern> enumerate_patterns(int n);

// One solution of the reduced 5-equation system
//   sum_k i_k a_k = 1,   sum_k i_k a_k^(2j+1) = 0  (j = 1..4):
// the value a[k] is taken with multiplicity i[k].  Values are pairwise
// distinct (> 1e-9) and, within runs of equal multiplicities, sorted
// descending (the canonical representative of the relabeling class).
struct ReducedSolution {
  Pattern pattern;
  std::array<double, 5> a{};
};

// All real solutions found by damped Newton from `num_starts` quasi-random
// (Halton) starts in [-2,2]^5, deduplicated and verified: residuals of all 5
// equations <= 1e-12 (evaluated in extended precision) and values pairwise
// distinct.  Deterministic: no RNG state, fixed start sequence.
// `start_offset` shifts the window into the Halton sequence (the explicit
// seed key of the multistart; 0 is the canonical run).
std::vector<ReducedSolution> solve_reduced(const Pattern& pattern,
                                           int num_starts = 10000,
                                           std::uint64_t start_offset = 0);

// Closed-form number of mirror-symmetric arrangements: multiset permutations
// of the half-vector with multiplicities floor(i_k / 2).
std::uint64_t arrangement_count(const Pattern& pattern);

// Closed-form number of unordered arrangements (no symmetry):
// n! / (i_1! ... i_5!).  Documented for scale; never enumerated.
std::uint64_t unordered_arrangement_count(const Pattern& pattern);

// Stream every length-n vector that assigns the solution values to positions
// 1..n with multiplicities i_k and satisfies gamma_j = gamma_{n-j+1} exactly
// (the odd-multiplicity value occupies the center).  Deterministic order:
// depth-first over positions 1..[n/2], values tried in pattern order.
// The visitor returns false to stop early.  Returns the number of vectors
// yielded.  Throws std::invalid_argument when more than one i_k is odd.
std::uint64_t symmetric_arrangements(
    const Pattern& pattern, const ReducedSolution& sol,
    const std::function<bool(const Eigen::VectorXd&)>& visit);

// Acceptance predicate for candidate seeds.
struct SeedFilter {
  double N_max = 7.5;    // 1-norm bound (inclusive)
  double of2_max = 0.8;  // strict bound on the max |primed partial sum|
  double cumsum_lo = 0.0;
  double cumsum_hi = 1.0;
};

// True iff
//   sum |gamma_k| <= N_max,
//   cumsum_lo <= sum_{k<=i} gamma_k <= cumsum_hi for i = 2..n, and
//   max_{1<=i<=[n/2]} |gamma_1+...+gamma_{i-1} + gamma_i/2| < of2_max.
// The partial-sum bounds carry a 1e-12 slack: seeds satisfy sum gamma = 1
// exactly in exact arithmetic, so the i = n sum sits on the upper bound and
// must not be rejected by rounding.
bool filter_seed(const Eigen::VectorXd& gamma, const SeedFilter& f);

// Filtered stream over one (pattern, solution) block.  Equivalent to running
// symmetric_arrangements and keeping the vectors filter_seed accepts, but
// prunes inside the search tree (partial-sum and half-1-norm bounds fail
// whole subtrees at once), so blocks far over budget cost almost nothing.
// The visitor receives the arrangement's index in the raw deterministic
// stream order and the vector; returning false stops the walk.
struct FilteredStreamResult {
  std::uint64_t accepted = 0;  // vectors passed to the visitor
  std::uint64_t raw = 0;       // size of the underlying raw stream
  bool stopped = false;        // visitor requested an early stop
};
FilteredStreamResult filtered_arrangements(
    const Pattern& pattern, const ReducedSolution& sol, const SeedFilter& f,
    const std::function<bool(std::uint64_t, const Eigen::VectorXd&)>& visit);

// Lift a seed vector (mirror-symmetric, satisfying the 5 always-active
// scalar conditions to ~1e-10) onto the stage-0 augmented system:
// scale (1, gamma) by R/||gamma|| onto the radius-R sphere, zero the
// symmetry-row and released multipliers, recover the remaining multiplier
// direction (objective, sphere, 5 conditions) as the null vector of the
// gradient-row block, normalize the multipliers to the R_lambda sphere, and
// polish with full Newton on the square stage-0 map.  Returns std::nullopt
// (with a reason in *diagnostics if given) when the seed violates its
// preconditions or the polish fails; otherwise the vertex residual is
// <= 1e-10.  Requires a system built by build_benchmark_system.
std::optional<Vertex> lift_seed(const Eigen::VectorXd& gamma,
                                const StagedLagrangeSystem& sys,
                                std::string* diagnostics = nullptr,
                                const std::string& provenance = "seed");

// Per-pattern accounting for the seed generation pipeline.
struct PatternReport {
  Pattern pattern;
  int solutions = 0;               // reduced-system solutions
  std::uint64_t arrangements = 0;  // raw symmetric arrangements (all sols)
  std::uint64_t accepted = 0;      // passed the filter
  std::uint64_t lifted = 0;        // lifted and inserted or deduplicated
  std::uint64_t lift_failures = 0;
};

struct GenerateOptions {
  std::uint64_t seed_limit = 0;  // stop after this many accepted seeds (0 = all)
  int threads = 1;               // (pattern, solution) blocks run in parallel
  std::string dump_path;         // JSONL dump of accepted seeds (pre-lift)
  int solver_starts = 10000;     // multistart budget per pattern
  std::uint64_t rng_seed = 0;    // Halton start offset for the multistart
  const std::atomic<bool>* stop = nullptr;  // cooperative interruption
  // Progress hook: called once per pattern when its counts are final
  // (serialized; never concurrent with itself).
  std::function<void(const PatternReport&)> on_pattern;
};

struct GenerateResult {
  std::vector<PatternReport> per_pattern;  // in enumerate_patterns order
  std::uint64_t accepted = 0;
  std::uint64_t lifted = 0;      // inserted + duplicates
  std::uint64_t duplicates = 0;  // lifted onto an already-stored vertex
  std::uint64_t lift_failures = 0;
  bool interrupted = false;
};

// Enumerate + solve + filter only (no lifting): the totals report.
GenerateResult count_seeds(int n, const SeedFilter& f,
                           const GenerateOptions& opt = {});

// Full pipeline: enumerate patterns, solve the reduced systems, stream the
// filtered symmetric arrangements, lift each accepted seed and insert it
// into `out` (a stage-0 StageSet).  Seeds are dumped (when dump_path is set)
// before lifting, so a dump survives an interrupted lifting pass.  With
// threads = 1 the accepted stream order is deterministic; with more threads
// the totals are deterministic but the order (and, under seed_limit, the
// chosen subset) is not.
GenerateResult generate_S0(int n, const SeedFilter& f,
                           const StagedLagrangeSystem& sys, StageSet& out,
                           const GenerateOptions& opt = {});

// Re-read a JSONL seed dump, calling visit(pattern, arrangement_index,
// gamma) per record; returns the record count.  Throws std::runtime_error
// on unreadable files or malformed records.
std::uint64_t load_seed_dump(
    const std::string& path,
    const std::function<void(const Pattern&, std::uint64_t,
                             const Eigen::VectorXd&)>& visit);

}  // namespace gradcont
