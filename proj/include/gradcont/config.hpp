#pragma once

// Run configuration: one serialized artifact holding every tunable of the
// pipeline (seed filter, curve tracker, exploration, worker pool, output
// location), loadable from a flat key-value text file.

#include <cstdint>
#include <string>
#include <vector>

#include "gradcont/explorer.hpp"
#include "gradcont/seeds.hpp"
#include "gradcont/tracker.hpp"

namespace gradcont {

struct RunConfig {
  int n = 31;                 // number of composition stages (odd)
  SeedFilter filter;          // seed acceptance windows
  TrackerConfig tracker;      // curve-following parameters
  ExploreConfig explore;      // exploration parameters (tracker/max_inflight/
                              // stop are overwritten by make_explore())
  int threads = 1;            // worker pool size; 1 = deterministic serial
  std::string out_dir;        // artifact directory
  bool resume = false;        // reuse completed stage checkpoints
  std::vector<int> stage_order;  // released-constraint activation order
                                 // (0-based into the released tail); empty =
                                 // natural order
  std::uint64_t rng_seed = 0;    // Halton start offset of the multistart
  std::uint64_t seed_limit = 0;  // subsample S_0 (0 = all)
  int solver_starts = 10000;     // multistart budget per pattern
  double R = 4.0;                // homogenizing sphere radius
  double R_lambda = 1.0;         // multiplier sphere radius

  // Throws std::invalid_argument on out-of-range values (threads < 1,
  // non-positive radii, inconsistent filter windows, bad tracker settings).
  void validate() const;

  // The exploration config actually used: `explore` with the tracker, the
  // worker budget, and the interrupt flag filled in from this RunConfig.
  ExploreConfig make_explore(const std::atomic<bool>* stop = nullptr) const;
};

// Flat key-value text format: one `key = value` per line, '#' starts a
// comment, blank lines ignored.  Keys are the RunConfig field names, with
// nested structs spelled as prefixes (filter.N_max, tracker.h0,
// explore.G_max, ...).  stage_order is a comma-separated list.  Unknown keys
// and malformed values throw std::runtime_error with the offending line.
RunConfig load_config(const std::string& path);

// Writes every key (round-trips through load_config bit-exactly).
void save_config(const std::string& path, const RunConfig& cfg);

}  // namespace gradcont
