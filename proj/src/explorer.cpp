#include "gradcont/explorer.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "gradcont/checkpoint.hpp"

namespace gradcont {

std::uint64_t vertex_id(const Eigen::VectorXd& z) {
  std::uint64_t h = 14695981039346656037ull;  // FNV-1a offset basis
  auto mix = [&h](std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xffull;
      h *= 1099511628211ull;  // FNV prime
    }
  };
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const auto q = static_cast<std::int64_t>(std::llround(z[i] * 1e6));
    mix(static_cast<std::uint64_t>(q));
  }
  return h;
}

void canonicalize_multiplier_sign(Eigen::VectorXd& z, int n) {
  const Eigen::Index off = n + 1;
  for (Eigen::Index i = off; i < z.size(); ++i) {
    if (std::abs(z[i]) > 1e-12) {
      if (z[i] < 0.0) z.tail(z.size() - off) *= -1.0;
      return;
    }
  }
}

StageSet::StageSet(int stage, double dedup_tol) : stage_(stage), tol_(dedup_tol) {
  if (!(dedup_tol > 0.0))
    throw std::invalid_argument("StageSet: dedup_tol must be positive");
}

std::size_t StageSet::size() const {
  std::lock_guard<std::mutex> lk(mu_);
  return verts_.size();
}

void StageSet::ensure_projection(int dim) const {
  if (proj_.size() == dim) return;
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> nd;
  proj_.resize(dim);
  for (int i = 0; i < dim; ++i) proj_[i] = nd(rng);
  proj_.normalize();
  width_ = std::sqrt(static_cast<double>(dim)) * tol_;
}

long long StageSet::bucket_of(const Eigen::VectorXd& z) const {
  return static_cast<long long>(std::floor(proj_.dot(z) / width_));
}

std::optional<std::uint64_t> StageSet::find_locked(const Eigen::VectorXd& z) const {
  ensure_projection(static_cast<int>(z.size()));
  const long long b = bucket_of(z);
  for (long long d = -1; d <= 1; ++d) {
    const auto it = buckets_.find(b + d);
    if (it == buckets_.end()) continue;
    for (const std::size_t idx : it->second) {
      if ((verts_[idx].z - z).lpNorm<Eigen::Infinity>() <= tol_)
        return verts_[idx].id;
    }
  }
  return std::nullopt;
}

std::optional<std::uint64_t> StageSet::find(const Eigen::VectorXd& z) const {
  std::lock_guard<std::mutex> lk(mu_);
  return find_locked(z);
}

std::pair<std::uint64_t, bool> StageSet::insert(Vertex v) {
  std::lock_guard<std::mutex> lk(mu_);
  if (v.stage != stage_)
    throw std::invalid_argument("StageSet: vertex stage mismatch");
  if (const auto existing = find_locked(v.z)) return {*existing, false};
  const std::uint64_t id = v.id;
  buckets_[bucket_of(v.z)].push_back(verts_.size());
  verts_.push_back(std::move(v));
  return {id, true};
}

std::vector<Vertex> StageSet::snapshot() const {
  std::lock_guard<std::mutex> lk(mu_);
  return verts_;
}

std::vector<Vertex> StageSet::sorted_by_merit() const {
  std::vector<Vertex> out = snapshot();
  std::stable_sort(out.begin(), out.end(), [](const Vertex& a, const Vertex& b) {
    if (a.merit != b.merit) return a.merit < b.merit;
    return a.id < b.id;
  });
  return out;
}

void ExploreConfig::validate() const {
  if (!(accept_tol > 0.0))
    throw std::invalid_argument("ExploreConfig: accept_tol must be positive");
  if (!(dedup_tol > accept_tol))
    throw std::invalid_argument("ExploreConfig: dedup_tol must exceed accept_tol");
  if (max_inflight < 1)
    throw std::invalid_argument("ExploreConfig: max_inflight must be >= 1");
  tracker.validate();
}

ExpandResult expand_vertex(const StagedLagrangeSystem& sys, int k,
                           const Vertex& v, StageSet& S_k,
                           const ExploreConfig& cfg) {
  cfg.validate();
  if (k < 1 || k > sys.r())
    throw std::invalid_argument("expand_vertex: stage out of range");
  if (S_k.stage() != k)
    throw std::invalid_argument("expand_vertex: StageSet is for a different stage");

  ExpandResult res;

  const double pre = sys.eval_F(k - 1, v.z).lpNorm<Eigen::Infinity>();
  if (!(pre <= cfg.accept_tol)) {
    res.rejected_off_curve = true;
    std::ostringstream os;
    os << "vertex " << v.id << ": stage-" << (k - 1) << " residual " << pre
       << " exceeds accept_tol " << cfg.accept_tol;
    res.message = os.str();
    return res;
  }

  StageCurve curve(sys, k);
  Eigen::VectorXd z0 = v.z;
  if (curve.H(z0).lpNorm<Eigen::Infinity>() > cfg.tracker.newton_tol) {
    const auto proj = project_to_curve(curve, z0, cfg.tracker);
    if (!proj) {
      res.rejected_off_curve = true;
      res.message = "vertex " + std::to_string(v.id) +
                    ": could not refine the start point onto the curve";
      return res;
    }
    z0 = proj->z;
  }

  // A duplicate hit ends the whole curve (both directions): the rest of it
  // was already explored when the existing vertex was first stored.
  bool stop_curve = false;
  auto process = [&](const TraceEvent& ev) {
    ++res.zeros_found;
    Eigen::VectorXd z = ev.z;
    canonicalize_multiplier_sign(z, sys.n());
    const double merit = sys.merit(z);
    const double resid = sys.eval_F(k, z).lpNorm<Eigen::Infinity>();
    if (!(resid <= cfg.accept_tol)) return;  // not certifiable; skip
    if (!std::isfinite(merit) || merit > cfg.G_max) {
      // Never stored, but a previously stored duplicate still ends the curve.
      if (const auto existing = S_k.find(z)) {
        ++res.duplicates;
        res.edges.push_back(Edge{v.id, *existing, k});
        stop_curve = true;
      } else {
        ++res.merit_rejected;
      }
      return;
    }
    Vertex nv;
    nv.id = vertex_id(z);
    nv.stage = k;
    nv.z = std::move(z);
    nv.merit = merit;
    nv.residual = resid;
    nv.provenance = std::to_string(v.id);
    const auto [id, inserted] = S_k.insert(nv);
    res.edges.push_back(Edge{v.id, id, k});
    if (!inserted) {
      ++res.duplicates;
      stop_curve = true;
      return;
    }
    ++res.inserted;
    res.new_vertices.push_back(std::move(nv));
  };

  try {
    const FollowResult fwd = follow(curve, z0, +1, cfg.tracker);
    res.forward_termination = fwd.termination.kind;
    for (const auto& ev : fwd.zeros) {
      process(ev);
      if (stop_curve) break;
    }
    if (!stop_curve && fwd.termination.kind != TraceKind::LoopClosure) {
      const FollowResult bwd = follow(curve, z0, -1, cfg.tracker);
      res.backward_termination = bwd.termination.kind;
      for (const auto& ev : bwd.zeros) {
        process(ev);
        if (stop_curve) break;
      }
    }
  } catch (const std::exception& e) {
    res.message = std::string("vertex ") + std::to_string(v.id) + ": " + e.what();
  }
  return res;
}

StageStats run_stage(const StagedLagrangeSystem& sys, int k,
                     const StageSet& S_prev, StageSet& S_k,
                     const ExploreConfig& cfg) {
  cfg.validate();
  const std::vector<Vertex> todo = S_prev.snapshot();
  StageStats st;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> interrupted{false};

  auto worker = [&]() {
    for (;;) {
      if (cfg.stop && cfg.stop->load()) {
        interrupted.store(true);
        return;
      }
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      ExpandResult r;
      std::string fail;
      try {
        r = expand_vertex(sys, k, todo[i], S_k, cfg);
        if (r.rejected_off_curve) fail = r.message;
      } catch (const std::exception& e) {
        fail = e.what();
      }
      std::lock_guard<std::mutex> lk(mu);
      ++st.expanded;
      st.inserted += r.inserted;
      st.duplicates += r.duplicates;
      st.merit_rejected += r.merit_rejected;
      st.edges.insert(st.edges.end(), r.edges.begin(), r.edges.end());
      if (!fail.empty())
        st.failures.push_back(std::move(fail));
      else if (!r.message.empty())
        st.failures.push_back(r.message);
    }
  };

  const int workers = std::max(1, cfg.max_inflight);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  st.interrupted = interrupted.load();
  return st;
}

namespace {

// Pipelined engine: a single work queue of (stage, vertex) items; storing a
// stage-k vertex immediately enqueues its stage-(k+1) expansion.
void run_pipelined(const StagedLagrangeSystem& sys,
                   std::vector<std::unique_ptr<StageSet>>& sets, int first_stage,
                   const ExploreConfig& cfg, ExploreOutcome& out) {
  const int r = sys.r();
  std::deque<std::pair<int, Vertex>> queue;
  std::mutex qm;
  std::condition_variable cv;
  int active = 0;
  bool stopped = false;
  std::mutex om;

  for (const auto& v : sets[first_stage - 1]->snapshot())
    queue.emplace_back(first_stage, v);

  auto worker = [&]() {
    std::unique_lock<std::mutex> lk(qm);
    for (;;) {
      cv.wait(lk, [&] { return stopped || !queue.empty() || active == 0; });
      if (stopped) return;
      if (queue.empty()) {
        if (active == 0) {
          cv.notify_all();
          return;
        }
        continue;
      }
      auto [k, v] = std::move(queue.front());
      queue.pop_front();
      ++active;
      lk.unlock();

      if (cfg.stop && cfg.stop->load()) {
        lk.lock();
        --active;
        stopped = true;
        cv.notify_all();
        return;
      }
      ExpandResult res;
      std::string fail;
      try {
        res = expand_vertex(sys, k, v, *sets[k], cfg);
        if (res.rejected_off_curve) fail = res.message;
      } catch (const std::exception& e) {
        fail = e.what();
      }
      {
        std::lock_guard<std::mutex> og(om);
        out.edges.insert(out.edges.end(), res.edges.begin(), res.edges.end());
        if (!fail.empty())
          out.failures.push_back(std::move(fail));
        else if (!res.message.empty())
          out.failures.push_back(res.message);
      }
      lk.lock();
      if (k < r)
        for (auto& nv : res.new_vertices) queue.emplace_back(k + 1, std::move(nv));
      --active;
      cv.notify_all();
    }
  };

  const int workers = std::max(1, cfg.max_inflight);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (stopped || (cfg.stop && cfg.stop->load())) out.interrupted = true;
}

}  // namespace

ExploreOutcome run_all(const StagedLagrangeSystem& sys, const StageSet& S0,
                       const ExploreConfig& cfg, const std::string& checkpoint_dir,
                       bool resume) {
  cfg.validate();
  const int r = sys.r();
  ExploreOutcome out;
  out.stage_counts.assign(static_cast<std::size_t>(r) + 1, 0);

  std::vector<std::unique_ptr<StageSet>> sets;
  sets.reserve(static_cast<std::size_t>(r) + 1);
  for (int k = 0; k <= r; ++k)
    sets.push_back(std::make_unique<StageSet>(k, cfg.dedup_tol));

  const bool persist = !checkpoint_dir.empty();
  if (persist && !resume) clear_checkpoints(checkpoint_dir);

  if (persist && resume && stage_checkpoint_exists(checkpoint_dir, 0)) {
    load_stage_checkpoint(checkpoint_dir, 0, *sets[0], nullptr);
  } else {
    for (auto& v : S0.snapshot()) sets[0]->insert(std::move(v));
    if (persist) write_stage_checkpoint(checkpoint_dir, *sets[0], {}, sys.n());
  }
  out.stage_counts[0] = sets[0]->size();

  int first = 1;
  if (persist && resume) {
    for (int k = 1; k <= r; ++k) {
      if (!stage_checkpoint_exists(checkpoint_dir, k)) break;
      load_stage_checkpoint(checkpoint_dir, k, *sets[k], &out.edges);
      out.stage_counts[k] = sets[k]->size();
      out.resumed_through = k;
      first = k + 1;
    }
  }

  if (first <= r) {
    if (cfg.pipelined) {
      run_pipelined(sys, sets, first, cfg, out);
      for (int k = first; k <= r; ++k)
        out.stage_counts[k] = sets[k]->size();
      if (persist && !out.interrupted) {
        for (int k = first; k <= r; ++k) {
          std::vector<Edge> stage_edges;
          for (const Edge& e : out.edges)
            if (e.stage == k) stage_edges.push_back(e);
          write_stage_checkpoint(checkpoint_dir, *sets[k], stage_edges, sys.n());
        }
      }
    } else {
      for (int k = first; k <= r; ++k) {
        if (cfg.stop && cfg.stop->load()) {
          out.interrupted = true;
          break;
        }
        StageStats st = run_stage(sys, k, *sets[k - 1], *sets[k], cfg);
        for (auto& f : st.failures) out.failures.push_back(std::move(f));
        if (st.interrupted) {
          // Do not checkpoint a partially expanded stage; earlier stages
          // remain resumable.
          out.interrupted = true;
          break;
        }
        out.stage_counts[k] = sets[k]->size();
        out.edges.insert(out.edges.end(), st.edges.begin(), st.edges.end());
        if (persist)
          write_stage_checkpoint(checkpoint_dir, *sets[k], st.edges, sys.n());
      }
    }
  }

  out.final_vertices = sets[r]->sorted_by_merit();
  return out;
}

}  // namespace gradcont
