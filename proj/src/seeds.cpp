#include "gradcont/seeds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "gradcont/order_conditions.hpp"
#include "gradcont/tracker.hpp"
#include "json.hpp"

namespace gradcont {

namespace {

using Vec5L = Eigen::Matrix<long double, 5, 1>;
using Mat5L = Eigen::Matrix<long double, 5, 5>;

// Reduced system f(a) = (sum i_k a_k - 1, sum i_k a_k^3, ..., sum i_k a_k^9)
// in extended precision: the odd-power sums cancel heavily near a root.
Vec5L reduced_system(const Pattern& p, const Vec5L& a) {
  Vec5L f = Vec5L::Zero();
  for (int k = 0; k < 5; ++k) {
    const long double ik = p.i[k];
    const long double sq = a[k] * a[k];
    long double pw = a[k];
    f[0] += ik * pw;
    for (int j = 1; j <= 4; ++j) {
      pw *= sq;
      f[j] += ik * pw;
    }
  }
  f[0] -= 1.0L;
  return f;
}

Mat5L reduced_jacobian(const Pattern& p, const Vec5L& a) {
  Mat5L J;
  for (int k = 0; k < 5; ++k) {
    const long double ik = p.i[k];
    const long double sq = a[k] * a[k];
    J(0, k) = ik;
    long double pw = 1.0L;
    for (int j = 1; j <= 4; ++j) {
      pw *= sq;
      J(j, k) = ik * (2 * j + 1) * pw;
    }
  }
  return J;
}

// In-place Gaussian elimination with partial pivoting for the 5x5 Newton
// step; returns false when the pivot collapses (treat as singular).
bool solve5(Mat5L J, Vec5L f, Vec5L& x) {
  for (int c = 0; c < 5; ++c) {
    int piv = c;
    long double best = std::abs(J(c, c));
    for (int r = c + 1; r < 5; ++r) {
      const long double v = std::abs(J(r, c));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (!(best > 1e-300L)) return false;
    if (piv != c) {
      J.row(c).swap(J.row(piv));
      std::swap(f[c], f[piv]);
    }
    const long double inv = 1.0L / J(c, c);
    for (int r = c + 1; r < 5; ++r) {
      const long double m = J(r, c) * inv;
      if (m == 0.0L) continue;
      for (int c2 = c + 1; c2 < 5; ++c2) J(r, c2) -= m * J(c, c2);
      f[r] -= m * f[c];
    }
  }
  for (int r = 4; r >= 0; --r) {
    long double s = f[r];
    for (int c2 = r + 1; c2 < 5; ++c2) s -= J(r, c2) * x[c2];
    x[r] = s / J(r, r);
  }
  return true;
}

// Radical-inverse (van der Corput) value of index i in the given base.
double radical_inverse(std::uint64_t i, int base) {
  double r = 0.0, f = 1.0 / base;
  while (i) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f /= base;
  }
  return r;
}

// Canonical representative: within runs of equal multiplicities the values
// are sorted descending (relabeling within a run yields the same seed set).
void canonicalize_solution(const Pattern& p, std::array<double, 5>& a) {
  int j = 0;
  while (j < 5) {
    int k = j;
    while (k < 5 && p.i[k] == p.i[j]) ++k;
    std::sort(a.begin() + j, a.begin() + k, std::greater<double>());
    j = k;
  }
}

// Exact multiset-permutation count of `counts` (total <= 20 keeps every
// factorial integer-exact in 64 bits).
std::uint64_t multiset_permutations(const std::array<int, 5>& counts) {
  static const std::uint64_t fact[21] = {1ull,
                                         1ull,
                                         2ull,
                                         6ull,
                                         24ull,
                                         120ull,
                                         720ull,
                                         5040ull,
                                         40320ull,
                                         362880ull,
                                         3628800ull,
                                         39916800ull,
                                         479001600ull,
                                         6227020800ull,
                                         87178291200ull,
                                         1307674368000ull,
                                         20922789888000ull,
                                         355687428096000ull,
                                         6402373705728000ull,
                                         121645100408832000ull,
                                         2432902008176640000ull};
  int total = 0;
  for (int c : counts) total += c;
  if (total <= 20) {
    std::uint64_t r = fact[total];
    for (int c : counts) r /= fact[c];
    return r;
  }
  // Larger halves: build the count from exact binomial factors.
  __int128 r = 1;
  int used = 0;
  for (int c : counts) {
    // r *= C(used + c, c), computed multiplicatively (always integral).
    for (int t = 1; t <= c; ++t) r = r * (used + t) / t;
    used += c;
  }
  if (r > static_cast<__int128>(UINT64_MAX))
    throw std::overflow_error("arrangement count exceeds 64 bits");
  return static_cast<std::uint64_t>(r);
}

struct HalfBlock {
  std::array<double, 5> vals{};
  std::array<int, 5> counts{};  // floor(i_k / 2)
  double center = 0.0;
  int h = 0;
};

HalfBlock make_half_block(const Pattern& p, const ReducedSolution& sol) {
  if (p.odd_count() > 1)
    throw std::invalid_argument(
        "symmetric arrangements need at most one odd multiplicity");
  HalfBlock b;
  b.vals = sol.a;
  for (int k = 0; k < 5; ++k) {
    b.counts[k] = p.i[k] / 2;
    b.h += b.counts[k];
  }
  const int odd = p.odd_index();
  b.center = odd >= 0 ? sol.a[odd] : 0.0;
  return b;
}

// Raw depth-first enumeration of the half-vector multiset permutations.
// The vector is assembled in place (mirror + center) and reused between
// visitor calls.
class RawWalker {
 public:
  RawWalker(const Pattern& p, const ReducedSolution& sol,
            const std::function<bool(const Eigen::VectorXd&)>& visit)
      : b_(make_half_block(p, sol)), n_(p.n()), visit_(visit), g_(p.n()) {
    g_[b_.h] = b_.center;
  }

  std::uint64_t run() {
    rec(0);
    return yielded_;
  }

 private:
  bool rec(int depth) {
    if (depth == b_.h) {
      ++yielded_;
      return visit_(g_);
    }
    for (int k = 0; k < 5; ++k) {
      if (b_.counts[k] == 0) continue;
      g_[depth] = b_.vals[k];
      g_[n_ - 1 - depth] = b_.vals[k];
      --b_.counts[k];
      const bool keep = rec(depth + 1);
      ++b_.counts[k];
      if (!keep) return false;
    }
    return true;
  }

  HalfBlock b_;
  int n_;
  const std::function<bool(const Eigen::VectorXd&)>& visit_;
  Eigen::VectorXd g_;
  std::uint64_t yielded_ = 0;
};

// Filtered walk.  Subtrees that cannot satisfy the partial-sum or half-sum
// windows are skipped wholesale; their leaf counts keep the raw indexing
// aligned with the unpruned stream.  Pruning bounds carry a loose 1e-9
// slack; the exact filter_seed decides at every surviving leaf, so pruning
// can never reject a vector the plain stream + filter route would accept.
class FilteredWalker {
 public:
  FilteredWalker(
      const Pattern& p, const ReducedSolution& sol, const SeedFilter& f,
      const std::function<bool(std::uint64_t, const Eigen::VectorXd&)>& visit)
      : b_(make_half_block(p, sol)), f_(f), n_(p.n()), visit_(visit), g_(p.n()) {
    g_[b_.h] = b_.center;
    for (int k = 0; k < 5; ++k) {
      block_one_norm_ += p.i[k] * std::abs(sol.a[k]);
      total_sum_ += p.i[k] * sol.a[k];
    }
  }

  FilteredStreamResult run() {
    FilteredStreamResult res;
    res.raw = multiset_permutations(b_.counts);
    // Arrangement-independent rejections: the 1-norm and the full sum do not
    // depend on the ordering, so a breach rejects the whole block.
    if (block_one_norm_ > f_.N_max + kPrune) return res;
    if (total_sum_ < f_.cumsum_lo - kPrune ||
        total_sum_ > f_.cumsum_hi + kPrune)
      return res;
    rec(0, 0.0);
    res.accepted = accepted_;
    res.stopped = stopped_;
    return res;
  }

 private:
  static constexpr double kPrune = 1e-9;

  std::uint64_t subtree_leaves() const {
    return multiset_permutations(b_.counts);
  }

  bool rec(int depth, double prefix) {
    if (depth == b_.h) {
      const std::uint64_t idx = cursor_++;
      // Center partial sum, then the authoritative full-vector predicate.
      const double s_center = prefix + b_.center;
      if (s_center < f_.cumsum_lo - kPrune || s_center > f_.cumsum_hi + kPrune)
        return true;
      if (!filter_seed(g_, f_)) return true;
      ++accepted_;
      if (!visit_(idx, g_)) {
        stopped_ = true;
        return false;
      }
      return true;
    }
    const int d1 = depth + 1;
    for (int k = 0; k < 5; ++k) {
      if (b_.counts[k] == 0) continue;
      const double v = b_.vals[k];
      const double s = prefix + v;
      bool ok = std::abs(prefix + 0.5 * v) < f_.of2_max + kPrune;
      if (ok && d1 >= 2)
        ok = s >= f_.cumsum_lo - kPrune && s <= f_.cumsum_hi + kPrune;
      if (ok && d1 <= b_.h - 1) {
        const double mirror = total_sum_ - s;
        ok = mirror >= f_.cumsum_lo - kPrune && mirror <= f_.cumsum_hi + kPrune;
      }
      --b_.counts[k];
      if (!ok) {
        cursor_ += subtree_leaves();
        ++b_.counts[k];
        continue;
      }
      g_[depth] = v;
      g_[n_ - 1 - depth] = v;
      const bool keep = rec(d1, s);
      ++b_.counts[k];
      if (!keep) return false;
    }
    return true;
  }

  HalfBlock b_;
  SeedFilter f_;
  int n_;
  const std::function<bool(std::uint64_t, const Eigen::VectorXd&)>& visit_;
  Eigen::VectorXd g_;
  double block_one_norm_ = 0.0;
  double total_sum_ = 0.0;
  std::uint64_t cursor_ = 0;
  std::uint64_t accepted_ = 0;
  bool stopped_ = false;
};

void run_parallel(int items, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || items <= 1) {
    for (int i = 0; i < items; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= items) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int width = std::min(threads, items);
  pool.reserve(width);
  for (int t = 0; t < width; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

void append_dump_record(std::string& buf, const Pattern& pat,
                        std::uint64_t idx, const Eigen::VectorXd& g) {
  char tmp[64];
  buf += "{\"pattern\":[";
  for (int k = 0; k < 5; ++k) {
    std::snprintf(tmp, sizeof tmp, k ? ",%d" : "%d", pat.i[k]);
    buf += tmp;
  }
  std::snprintf(tmp, sizeof tmp, "],\"arrangement_index\":%llu,\"gamma\":[",
                static_cast<unsigned long long>(idx));
  buf += tmp;
  for (int i = 0; i < g.size(); ++i) {
    std::snprintf(tmp, sizeof tmp, i ? ",%.17g" : "%.17g", g[i]);
    buf += tmp;
  }
  buf += "]}\n";
}

// Shared driver behind count_seeds and generate_S0; `sys`/`out` are null in
// counting mode.
GenerateResult run_pipeline(int n, const SeedFilter& f,
                            const GenerateOptions& opt,
                            const StagedLagrangeSystem* sys, StageSet* out) {
  if (opt.threads < 1)
    throw std::invalid_argument("threads must be at least 1");
  if (sys && sys->n() != n)
    throw std::invalid_argument("system size does not match n");

  const auto patterns = enumerate_patterns(n);
  GenerateResult res;
  res.per_pattern.resize(patterns.size());
  for (std::size_t p = 0; p < patterns.size(); ++p)
    res.per_pattern[p].pattern = patterns[p];

  // Phase 1: reduced-system solutions, pattern-parallel.
  std::vector<std::vector<ReducedSolution>> sols(patterns.size());
  run_parallel(static_cast<int>(patterns.size()), opt.threads, [&](int p) {
    sols[p] = solve_reduced(patterns[p], opt.solver_starts, opt.rng_seed);
    res.per_pattern[p].solutions = static_cast<int>(sols[p].size());
    res.per_pattern[p].arrangements =
        arrangement_count(patterns[p]) * sols[p].size();
  });

  struct Block {
    int pattern_idx;
    const ReducedSolution* sol;
  };
  std::vector<Block> blocks;
  std::vector<int> blocks_left(patterns.size(), 0);
  for (std::size_t p = 0; p < patterns.size(); ++p) {
    for (const auto& s : sols[p]) blocks.push_back({static_cast<int>(p), &s});
    blocks_left[p] = static_cast<int>(sols[p].size());
    // Patterns without solutions have final (all-zero) counts already.
    if (sols[p].empty() && opt.on_pattern) opt.on_pattern(res.per_pattern[p]);
  }

  std::ofstream dump;
  if (!opt.dump_path.empty()) {
    dump.open(opt.dump_path, std::ios::binary | std::ios::trunc);
    if (!dump.good())
      throw std::runtime_error("cannot open seed dump: " + opt.dump_path);
  }

  std::mutex sink_mutex;  // dump stream + shared tallies
  std::atomic<std::uint64_t> accept_gate{0};
  std::atomic<bool> limit_hit{false};

  auto process_block = [&](int bi) {
    const Block& blk = blocks[static_cast<std::size_t>(bi)];
    const Pattern& pat = patterns[static_cast<std::size_t>(blk.pattern_idx)];
    PatternReport local;
    std::string dump_buf;
    std::uint64_t inserted = 0, dups = 0;

    const auto fres = filtered_arrangements(
        pat, *blk.sol, f,
        [&](std::uint64_t idx, const Eigen::VectorXd& g) {
          if (opt.stop && opt.stop->load(std::memory_order_relaxed)) {
            limit_hit.store(true);
            return false;
          }
          if (opt.seed_limit) {
            const std::uint64_t ticket = accept_gate.fetch_add(1);
            if (ticket >= opt.seed_limit) {
              limit_hit.store(true);
              return false;
            }
          }
          ++local.accepted;
          if (dump.is_open()) append_dump_record(dump_buf, pat, idx, g);
          if (sys) {
            std::string diag;
            std::ostringstream prov;
            prov << "seed pattern=" << pat.i[0];
            for (int k = 1; k < 5; ++k) prov << "," << pat.i[k];
            prov << " idx=" << idx;
            const auto v = lift_seed(g, *sys, &diag, prov.str());
            if (v) {
              ++local.lifted;
              if (out->insert(*v).second)
                ++inserted;
              else
                ++dups;
            } else {
              ++local.lift_failures;
            }
          }
          return true;
        });
    (void)fres;

    std::lock_guard<std::mutex> lock(sink_mutex);
    auto& row = res.per_pattern[static_cast<std::size_t>(blk.pattern_idx)];
    row.accepted += local.accepted;
    row.lifted += local.lifted;
    row.lift_failures += local.lift_failures;
    res.accepted += local.accepted;
    res.lifted += local.lifted;
    res.duplicates += dups;
    res.lift_failures += local.lift_failures;
    if (dump.is_open() && !dump_buf.empty()) dump << dump_buf;
    if (--blocks_left[static_cast<std::size_t>(blk.pattern_idx)] == 0 &&
        opt.on_pattern)
      opt.on_pattern(row);
  };

  run_parallel(static_cast<int>(blocks.size()), opt.threads, process_block);

  if (dump.is_open()) {
    dump.flush();
    if (!dump.good())
      throw std::runtime_error("seed dump write failed: " + opt.dump_path);
  }
  res.interrupted = limit_hit.load() ||
                    (opt.stop && opt.stop->load(std::memory_order_relaxed));
  return res;
}

}  // namespace

std::array<int, 5> Pattern::offsets() const {
  std::array<int, 5> off{};
  for (int k = 1; k < 5; ++k) off[k] = off[k - 1] + i[k - 1];
  return off;
}

int Pattern::odd_count() const {
  int c = 0;
  for (int k = 0; k < 5; ++k) c += i[k] % 2;
  return c;
}

int Pattern::odd_index() const {
  for (int k = 0; k < 5; ++k)
    if (i[k] % 2) return k;
  return -1;
}

std::vector<Pattern> enumerate_patterns(int n) {
  if (n % 2 == 0 || n < 9)
    throw std::invalid_argument("pattern enumeration needs odd n >= 9");
  std::vector<Pattern> out;
  for (int i1 = n - 4; i1 >= (n + 4) / 5; --i1)
    for (int i2 = std::min(i1, n - i1 - 3); i2 >= 1; --i2)
      for (int i3 = std::min(i2, n - i1 - i2 - 2); i3 >= 1; --i3)
        for (int i4 = std::min(i3, n - i1 - i2 - i3 - 1); i4 >= 1; --i4) {
          const int i5 = n - i1 - i2 - i3 - i4;
          if (i5 < 1 || i5 > i4) continue;
          const Pattern p{{i1, i2, i3, i4, i5}};
          if (p.odd_count() <= 1) out.push_back(p);
        }
  return out;
}

std::vector<ReducedSolution> solve_reduced(const Pattern& pattern,
                                           int num_starts,
                                           std::uint64_t start_offset) {
  for (int k = 0; k < 5; ++k) {
    if (pattern.i[k] < 1)
      throw std::invalid_argument("pattern entries must be positive");
    if (k && pattern.i[k] > pattern.i[k - 1])
      throw std::invalid_argument("pattern entries must be sorted descending");
  }
  static constexpr int kBases[5] = {2, 3, 5, 7, 11};
  std::vector<std::array<double, 5>> found;

  for (int s = 1; s <= num_starts; ++s) {
    Vec5L a;
    for (int d = 0; d < 5; ++d)
      a[d] = -2.0L + 4.0L * static_cast<long double>(radical_inverse(
                         start_offset + static_cast<std::uint64_t>(s),
                         kBases[d]));
    bool live = true;
    long double t_prev = 1.0L;
    int tiny_steps = 0;
    for (int it = 0; it < 80 && live; ++it) {
      const Vec5L fval = reduced_system(pattern, a);
      const long double base = fval.cwiseAbs().maxCoeff();
      if (base <= 1e-14L) break;
      Vec5L step;
      if (!solve5(reduced_jacobian(pattern, a), fval, step)) {
        live = false;
        break;
      }
      // Backtracking ladder, resumed near the last accepted step length so a
      // crawling iterate does not rescan the whole ladder every iteration.
      long double t = std::min(1.0L, 4.0L * t_prev);
      Vec5L trial = a - t * step;
      bool improved = false;
      for (int half = 0; half < 30; ++half) {
        if (trial.allFinite() &&
            reduced_system(pattern, trial).cwiseAbs().maxCoeff() < base) {
          improved = true;
          break;
        }
        t *= 0.5L;
        trial = a - t * step;
      }
      if (!improved) {
        // Stuck at a non-root stationary point of the residual.
        live = false;
        break;
      }
      t_prev = t;
      if (t < 1e-4L) {
        // Creeping along a residual valley; a root reached this way would
        // need far more than the iteration budget, so give up early.
        if (++tiny_steps >= 4) {
          live = false;
          break;
        }
      } else {
        tiny_steps = 0;
      }
      a = trial;
      if (!a.allFinite() || a.cwiseAbs().maxCoeff() > 1e4L) live = false;
    }
    if (!live || !a.allFinite()) continue;
    if (reduced_system(pattern, a).cwiseAbs().maxCoeff() > 1e-14L) continue;

    std::array<double, 5> ad;
    for (int d = 0; d < 5; ++d) ad[d] = static_cast<double>(a[d]);
    bool distinct = true;
    for (int p = 0; p < 5 && distinct; ++p)
      for (int q = p + 1; q < 5; ++q)
        if (std::abs(ad[p] - ad[q]) <= 1e-9) distinct = false;
    if (!distinct) continue;
    // Verify the invariants at the double-rounded tuple.
    Vec5L av;
    for (int d = 0; d < 5; ++d) av[d] = ad[d];
    if (reduced_system(pattern, av).cwiseAbs().maxCoeff() > 1e-12L) continue;

    canonicalize_solution(pattern, ad);
    bool dup = false;
    for (const auto& prev : found) {
      double diff = 0;
      for (int d = 0; d < 5; ++d)
        diff = std::max(diff, std::abs(prev[d] - ad[d]));
      if (diff < 1e-7) {
        dup = true;
        break;
      }
    }
    if (!dup) found.push_back(ad);
  }

  std::sort(found.begin(), found.end(), std::greater<>());
  std::vector<ReducedSolution> out;
  out.reserve(found.size());
  for (const auto& a : found) out.push_back({pattern, a});
  return out;
}

std::uint64_t arrangement_count(const Pattern& pattern) {
  std::array<int, 5> half{};
  for (int k = 0; k < 5; ++k) half[k] = pattern.i[k] / 2;
  return multiset_permutations(half);
}

std::uint64_t unordered_arrangement_count(const Pattern& pattern) {
  return multiset_permutations(pattern.i);
}

std::uint64_t symmetric_arrangements(
    const Pattern& pattern, const ReducedSolution& sol,
    const std::function<bool(const Eigen::VectorXd&)>& visit) {
  RawWalker walker(pattern, sol, visit);
  return walker.run();
}

bool filter_seed(const Eigen::VectorXd& gamma, const SeedFilter& f) {
  const int n = static_cast<int>(gamma.size());
  if (gamma.lpNorm<1>() > f.N_max) return false;
  constexpr double kSlack = 1e-12;
  double s = n > 0 ? gamma[0] : 0.0;
  for (int i = 2; i <= n; ++i) {
    s += gamma[i - 1];
    if (s < f.cumsum_lo - kSlack || s > f.cumsum_hi + kSlack) return false;
  }
  double t = 0.0;
  for (int i = 1; i <= n / 2; ++i) {
    if (std::abs(t + 0.5 * gamma[i - 1]) >= f.of2_max) return false;
    t += gamma[i - 1];
  }
  return true;
}

FilteredStreamResult filtered_arrangements(
    const Pattern& pattern, const ReducedSolution& sol, const SeedFilter& f,
    const std::function<bool(std::uint64_t, const Eigen::VectorXd&)>& visit) {
  FilteredWalker walker(pattern, sol, f, visit);
  return walker.run();
}

std::optional<Vertex> lift_seed(const Eigen::VectorXd& gamma,
                                const StagedLagrangeSystem& sys,
                                std::string* diagnostics,
                                const std::string& provenance) {
  const auto fail = [&](const std::string& why) -> std::optional<Vertex> {
    if (diagnostics) *diagnostics = why;
    return std::nullopt;
  };

  const int n = sys.n();
  const int h = n / 2;
  if (gamma.size() != n) return fail("seed has wrong length");
  if (sys.backend().count() != h + 17)
    return fail("system lacks the sphere/symmetry/16-condition layout");
  if (!gamma.allFinite()) return fail("seed has non-finite entries");
  const double norm = gamma.norm();
  if (norm <= 0.0) return fail("seed is the zero vector");

  for (int j = 1; j <= h; ++j)
    if (std::abs(gamma[j - 1] - gamma[n - j]) > 1e-10)
      return fail("seed violates mirror symmetry at position " +
                  std::to_string(j));
  const Eigen::VectorXd conds = order_condition_values(gamma);
  for (int q = 0; q < 5; ++q)
    if (std::abs(conds[q]) > 1e-10)
      return fail("seed violates always-active condition " +
                  std::to_string(q) + " (residual " +
                  std::to_string(conds[q]) + ")");

  // Scale onto the sphere; gamma_0 carries the scale factor.
  const double s = sys.R() / norm;
  Eigen::VectorXd gam(n + 1);
  gam[0] = s;
  gam.tail(n) = s * gamma;

  // Multiplier direction over the 7 admissible columns (objective, sphere,
  // 5 always-active conditions): the smallest right singular vector of the
  // gradient-row block.
  Eigen::MatrixXd J(sys.m() + 1, n + 1);
  sys.backend().jacobian(gam, J);
  Eigen::MatrixXd A(n + 1, 7);
  A.setZero();
  A(0, 0) = -2.0 * gam[0];
  A.col(1) = J.row(0).transpose();
  for (int q = 0; q < 5; ++q) A.col(2 + q) = J.row(h + 1 + q).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv[5] <= 1e-8 * sv[0])
    return fail("multiplier direction is not unique at this seed");
  const Eigen::VectorXd dir = svd.matrixV().col(6);

  Eigen::VectorXd lam = Eigen::VectorXd::Zero(sys.m() + 2);
  lam[0] = dir[0];
  lam[1] = dir[1];
  for (int q = 0; q < 5; ++q) lam[h + 2 + q] = dir[2 + q];
  lam *= sys.R_lambda() / lam.norm();

  Eigen::VectorXd z(sys.ell());
  z << gam, lam;
  canonicalize_multiplier_sign(z, n);

  // Full Newton on the square stage-0 map.
  const int ell = sys.ell();
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd F = sys.eval_F(0, z);
    if (!F.allFinite()) return fail("polish diverged (non-finite residual)");
    if (F.lpNorm<Eigen::Infinity>() <= 1e-12) break;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.jac_F(0, z));
    qr.setThreshold(1e-12);
    if (qr.rank() < ell)
      return fail("singular stage-0 jacobian during polish");
    const Eigen::VectorXd dz = qr.solve(-F);
    if (!dz.allFinite() || dz.norm() > 1e3)
      return fail("polish step diverged");
    z += dz;
  }
  const double resid = sys.eval_F(0, z).lpNorm<Eigen::Infinity>();
  if (!(resid <= 1e-10))
    return fail("polish stalled at residual " + std::to_string(resid));
  canonicalize_multiplier_sign(z, n);

  Vertex v;
  v.id = vertex_id(z);
  v.stage = 0;
  v.z = std::move(z);
  v.merit = sys.merit(v.z);
  v.residual = resid;
  v.provenance = provenance;
  return v;
}

GenerateResult count_seeds(int n, const SeedFilter& f,
                           const GenerateOptions& opt) {
  return run_pipeline(n, f, opt, nullptr, nullptr);
}

GenerateResult generate_S0(int n, const SeedFilter& f,
                           const StagedLagrangeSystem& sys, StageSet& out,
                           const GenerateOptions& opt) {
  return run_pipeline(n, f, opt, &sys, &out);
}

std::uint64_t load_seed_dump(
    const std::string& path,
    const std::function<void(const Pattern&, std::uint64_t,
                             const Eigen::VectorXd&)>& visit) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot open seed dump: " + path);
  std::string line;
  std::uint64_t count = 0;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw std::runtime_error("seed dump line " + std::to_string(line_no) +
                               ": " + e.what());
    }
    if (!rec.contains("pattern") || !rec.contains("arrangement_index") ||
        !rec.contains("gamma") || rec["pattern"].size() != 5)
      throw std::runtime_error("seed dump line " + std::to_string(line_no) +
                               ": missing fields");
    Pattern pat;
    for (int k = 0; k < 5; ++k) pat.i[k] = rec["pattern"][k].get<int>();
    const auto& gj = rec["gamma"];
    Eigen::VectorXd g(gj.size());
    for (std::size_t i = 0; i < gj.size(); ++i) g[i] = gj[i].get<double>();
    visit(pat, rec["arrangement_index"].get<std::uint64_t>(), g);
    ++count;
  }
  return count;
}

}  // namespace gradcont
