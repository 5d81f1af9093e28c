#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gradcont/staged_system.hpp"
#include "gradcont/tracker.hpp"

namespace gradcont {

// A stationary point stored in the exploration graph.
struct Vertex {
  std::uint64_t id = 0;   // stable hash of the quantized coordinates
  int stage = 0;          // k: how many released constraints are active
  Eigen::VectorXd z;      // augmented point (gamma then lambda)
  double merit = 0.0;     // R / |gamma_0|; +inf when gamma_0 == 0
  double residual = 0.0;  // ||F_k(z)||_inf at the vertex's stage
  std::string provenance; // parent vertex id, or a seed tag for stage 0
};

// Directed edge recording that `to` (stage k) was reached by following the
// curve through `from` (stage k-1).
struct Edge {
  std::uint64_t from = 0;
  std::uint64_t to = 0;
  int stage = 0;  // stage of `to`
};

// Stable id: FNV-1a over the coordinates quantized on a 1e-6 grid.
std::uint64_t vertex_id(const Eigen::VectorXd& z);

// The multiplier block of an augmented point can be globally negated without
// leaving the zero set (the multiplier sphere is sign-symmetric); canonical
// representative: first multiplier component of magnitude > 1e-12 positive.
void canonicalize_multiplier_sign(Eigen::VectorXd& z, int n);

// Tolerance-deduplicating store for the vertices of one stage: no two stored
// vertices are within dedup_tol of each other in the infinity norm.  Insert
// and membership test are a single linearizable operation (internal lock),
// so concurrent workers can share one StageSet.
//
// Lookup uses a 1-d bucket index: the projection of z onto a fixed
// pseudo-random unit vector, quantized at width sqrt(dim)*dedup_tol.  Any
// pair within dedup_tol in the infinity norm differs by at most
// sqrt(dim)*dedup_tol in that projection, so scanning the bucket and its two
// neighbours (with an exact infinity-norm re-check per candidate) is both
// sound and complete.
class StageSet {
 public:
  StageSet(int stage, double dedup_tol);

  StageSet(const StageSet&) = delete;
  StageSet& operator=(const StageSet&) = delete;

  int stage() const { return stage_; }
  double dedup_tol() const { return tol_; }
  std::size_t size() const;

  // Id of a stored vertex within dedup_tol of z, if any.
  std::optional<std::uint64_t> find(const Eigen::VectorXd& z) const;

  // Insert-if-absent: returns {id of the stored representative, inserted?}.
  // When a vertex within dedup_tol already exists, its id is returned and
  // nothing is modified.
  std::pair<std::uint64_t, bool> insert(Vertex v);

  // Copies of the stored vertices in insertion order.
  std::vector<Vertex> snapshot() const;
  // Copies sorted by (merit, id) ascending.
  std::vector<Vertex> sorted_by_merit() const;

 private:
  std::optional<std::uint64_t> find_locked(const Eigen::VectorXd& z) const;
  long long bucket_of(const Eigen::VectorXd& z) const;
  void ensure_projection(int dim) const;

  int stage_;
  double tol_;
  mutable std::mutex mu_;
  mutable Eigen::VectorXd proj_;  // fixed unit vector, built on first use
  mutable double width_ = 0.0;
  std::vector<Vertex> verts_;
  std::unordered_map<long long, std::vector<std::size_t>> buckets_;
};

struct ExploreConfig {
  // Merit threshold: located zeros with merit above this are traversed but
  // never stored.  Unbounded by default; benchmark values belong in run
  // configuration, not here.
  double G_max = std::numeric_limits<double>::infinity();
  double dedup_tol = 1e-5;   // must exceed accept_tol
  double accept_tol = 1e-8;  // residual bound for stored vertices
  TrackerConfig tracker;
  int max_inflight = 1;     // worker budget for stage expansion
  bool pipelined = false;   // start stage k+1 work as stage-k vertices appear
  // Cooperative interruption: when set and true, stage processing stops
  // between vertex expansions, leaving completed checkpoints intact.
  const std::atomic<bool>* stop = nullptr;

  void validate() const;
};

// Outcome of expanding a single stage-(k-1) vertex along its curve.
struct ExpandResult {
  bool rejected_off_curve = false;  // precondition failure; nothing followed
  std::string message;
  TraceKind forward_termination = TraceKind::SingularStop;
  std::optional<TraceKind> backward_termination;
  int zeros_found = 0;      // sign changes located on the curve
  int inserted = 0;         // new vertices stored
  int duplicates = 0;       // dedup hits (each one stops the curve)
  int merit_rejected = 0;   // zeros above G_max (or with gamma_0 = 0)
  std::vector<Vertex> new_vertices;
  std::vector<Edge> edges;
};

// Follow the stage-k curve through v (a stage k-1 vertex) forward, and --
// unless the forward traversal closed the loop or hit a stored duplicate --
// backward.  Each located zero is deduplicated against S_k; a duplicate stops
// the whole curve; otherwise the zero is stored (with an edge) when its merit
// is within G_max.
ExpandResult expand_vertex(const StagedLagrangeSystem& sys, int k,
                           const Vertex& v, StageSet& S_k,
                           const ExploreConfig& cfg);

struct StageStats {
  int expanded = 0;
  int inserted = 0;
  int duplicates = 0;
  int merit_rejected = 0;
  std::vector<Edge> edges;
  std::vector<std::string> failures;  // per-vertex problems; never fatal
  bool interrupted = false;
};

// Expand every vertex of S_prev into S_k.  max_inflight = 1 gives a
// deterministic serial run; otherwise a worker pool shares S_k through its
// linearizable insert.
StageStats run_stage(const StagedLagrangeSystem& sys, int k,
                     const StageSet& S_prev, StageSet& S_k,
                     const ExploreConfig& cfg);

struct ExploreOutcome {
  std::vector<Vertex> final_vertices;      // stage r, merit ascending
  std::vector<Edge> edges;                 // all stages
  std::vector<std::size_t> stage_counts;   // vertex count per stage 0..r
  std::vector<std::string> failures;
  bool interrupted = false;
  int resumed_through = 0;  // highest stage loaded from checkpoints
};

// Run stages 1..r from S0.  When checkpoint_dir is non-empty, every
// completed stage is persisted there (vertices as JSON lines, edges as CSV)
// and, with resume = true, previously completed stages are loaded instead of
// recomputed.  In pipelined mode stage barriers are dropped (work for stage
// k+1 starts as soon as a stage-k vertex exists) and checkpoints are written
// only at the end.
ExploreOutcome run_all(const StagedLagrangeSystem& sys, const StageSet& S0,
                       const ExploreConfig& cfg,
                       const std::string& checkpoint_dir = "",
                       bool resume = false);

}  // namespace gradcont
