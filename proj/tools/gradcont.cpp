// gradcont: staged-continuation search for composition-method coefficients.
//
// Subcommands:
//   seeds    enumerate + solve + filter seed candidates, lift to stage 0
//   explore  run the staged continuation over all released constraints
//   verify   check a coefficient file against the order conditions
//   polish   1-norm refinement of explored vertices / coefficient files
//   report   summarize the artifacts of a previous run
//
// Exit codes: 0 success, 1 verification/run failure, 2 usage/input error,
// 130 interrupted (checkpoints preserved).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cinttypes>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradcont/bench.hpp"
#include "gradcont/checkpoint.hpp"
#include "gradcont/config.hpp"
#include "gradcont/explorer.hpp"
#include "gradcont/seeds.hpp"
#include "gradcont/staged_system.hpp"

namespace fs = std::filesystem;
using namespace gradcont;

namespace {

std::atomic<bool> g_stop{false};

void install_signal_handlers() {
  std::signal(SIGINT, [](int) { g_stop.store(true); });
  std::signal(SIGTERM, [](int) { g_stop.store(true); });
}

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInterrupted = 130;

// Published seed totals to compare against (only the three benchmark sizes).
const std::map<int, std::uint64_t> kReferenceSeedTotals = {
    {31, 1954677}, {33, 4785415}, {35, 5801580}};

struct CommonFlags {
  std::string config_path;
  int n = -1;
  int threads = -1;
  std::int64_t seed_limit = -1;
  bool resume = false;
  std::string out_dir;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f, bool with_seed_limit) {
  cmd->add_option("--config", f.config_path,
                  "run configuration file (flat key = value text)");
  cmd->add_option("--n", f.n, "number of composition stages (odd)");
  cmd->add_option("--threads", f.threads,
                  "worker pool size (1 = deterministic serial)");
  if (with_seed_limit)
    cmd->add_option("--seed-limit", f.seed_limit,
                    "use only the first K accepted seeds (0 = all)");
  cmd->add_flag("--resume", f.resume,
                "reuse completed checkpoints from a previous run");
  cmd->add_option("--out", f.out_dir,
                  "output directory (default: $GRADCONT_OUT or ./gradcont_out)");
}

// defaults < config file < explicit flags < $GRADCONT_OUT fallback for out.
RunConfig resolve_config(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config_path.empty()) cfg = load_config(f.config_path);
  if (f.n >= 0) cfg.n = f.n;
  if (f.threads >= 0) cfg.threads = f.threads;
  if (f.seed_limit >= 0)
    cfg.seed_limit = static_cast<std::uint64_t>(f.seed_limit);
  if (f.resume) cfg.resume = true;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (cfg.out_dir.empty()) {
    if (const char* env = std::getenv("GRADCONT_OUT"); env && *env)
      cfg.out_dir = env;
    else
      cfg.out_dir = "gradcont_out";
  }
  cfg.validate();
  return cfg;
}

void require_odd_stage_count(int n) {
  if (n < 9 || n % 2 == 0)
    throw std::invalid_argument(
        "n must be an odd stage count of at least 9, got " +
        std::to_string(n));
}

std::string seeds_dump_path(const RunConfig& cfg) {
  return (fs::path(cfg.out_dir) / ("seeds_n" + std::to_string(cfg.n) + ".jsonl"))
      .string();
}
std::string seed_counts_path(const RunConfig& cfg) {
  return (fs::path(cfg.out_dir) /
          ("seed_counts_n" + std::to_string(cfg.n) + ".csv"))
      .string();
}
std::string explore_dir(const RunConfig& cfg) {
  return (fs::path(cfg.out_dir) / ("explore_n" + std::to_string(cfg.n)))
      .string();
}
std::string final_csv_path(const RunConfig& cfg) {
  return (fs::path(cfg.out_dir) / ("final_n" + std::to_string(cfg.n) + ".csv"))
      .string();
}

std::string pattern_str(const Pattern& p) {
  std::ostringstream os;
  os << "(" << p.i[0];
  for (int k = 1; k < 5; ++k) os << "," << p.i[k];
  os << ")";
  return os.str();
}

// Space-separated multiplicities: safe as a single CSV cell.
std::string pattern_cell(const Pattern& p) {
  std::ostringstream os;
  os << p.i[0];
  for (int k = 1; k < 5; ++k) os << " " << p.i[k];
  return os.str();
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// ---------------------------------------------------------------------------
// seeds

int cmd_seeds(const RunConfig& cfg, bool count_only) {
  require_odd_stage_count(cfg.n);
  fs::create_directories(cfg.out_dir);

  std::printf("seeds: n=%d  N_max=%g  of2<%g  cumsum=[%g,%g]  threads=%d%s\n",
              cfg.n, cfg.filter.N_max, cfg.filter.of2_max,
              cfg.filter.cumsum_lo, cfg.filter.cumsum_hi, cfg.threads,
              count_only ? "  (count-only)" : "");
  if (cfg.seed_limit)
    std::printf("seeds: stopping after %" PRIu64 " accepted seeds\n",
                cfg.seed_limit);

  GenerateOptions opt;
  opt.seed_limit = cfg.seed_limit;
  opt.threads = cfg.threads;
  // Counting runs skip the dump: at benchmark sizes the accepted stream is
  // tens of millions of records, far beyond what a totals report needs.
  if (!count_only) opt.dump_path = seeds_dump_path(cfg);
  opt.solver_starts = cfg.solver_starts;
  opt.rng_seed = cfg.rng_seed;
  opt.stop = &g_stop;
  opt.on_pattern = [](const PatternReport& row) {
    std::printf("  pattern %-14s sols=%d  arrangements=%-12" PRIu64
                " accepted=%" PRIu64 "\n",
                pattern_str(row.pattern).c_str(), row.solutions,
                row.arrangements, row.accepted);
    std::fflush(stdout);
  };

  const auto t0 = std::chrono::steady_clock::now();
  GenerateResult res;
  std::optional<StagedLagrangeSystem> sys;
  StageSet S0(0, cfg.explore.dedup_tol);
  if (count_only) {
    res = count_seeds(cfg.n, cfg.filter, opt);
  } else {
    sys.emplace(build_benchmark_system(cfg.n, cfg.R, cfg.R_lambda));
    res = generate_S0(cfg.n, cfg.filter, *sys, S0, opt);
  }

  // Per-pattern counts.
  {
    std::ofstream csv(seed_counts_path(cfg), std::ios::trunc);
    if (!csv.good())
      throw std::runtime_error("cannot write " + seed_counts_path(cfg));
    csv << "pattern,solutions,arrangements,accepted,lifted,lift_failures\n";
    for (const auto& row : res.per_pattern) {
      csv << pattern_cell(row.pattern) << "," << row.solutions << ","
          << row.arrangements << "," << row.accepted << "," << row.lifted
          << "," << row.lift_failures << "\n";
    }
    if (!csv.good())
      throw std::runtime_error("write failed: " + seed_counts_path(cfg));
  }

  if (!count_only) {
    fs::create_directories(explore_dir(cfg));
    write_stage_checkpoint(explore_dir(cfg), S0, {}, cfg.n);
  }

  std::printf("seeds: accepted %" PRIu64 " seeds in %.1f s\n", res.accepted,
              elapsed_s(t0));
  if (!count_only)
    std::printf("seeds: lifted %" PRIu64 " (stage-0 vertices %zu, duplicates %"
                PRIu64 ", lift failures %" PRIu64 ")\n",
                res.lifted, S0.size(), res.duplicates, res.lift_failures);
  if (const auto it = kReferenceSeedTotals.find(cfg.n);
      it != kReferenceSeedTotals.end() && !cfg.seed_limit && !res.interrupted) {
    const double dev =
        100.0 * (static_cast<double>(res.accepted) -
                 static_cast<double>(it->second)) /
        static_cast<double>(it->second);
    std::printf("seeds: reference total %" PRIu64 "  deviation %+.2f%%\n",
                it->second, dev);
  }
  if (count_only)
    std::printf("seeds: wrote %s\n", seed_counts_path(cfg).c_str());
  else
    std::printf("seeds: wrote %s and %s\n", seeds_dump_path(cfg).c_str(),
                seed_counts_path(cfg).c_str());

  if (g_stop.load()) {
    std::printf("seeds: interrupted; partial dump and counts preserved\n");
    return kExitInterrupted;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// explore

int cmd_explore(const RunConfig& cfg) {
  require_odd_stage_count(cfg.n);
  fs::create_directories(cfg.out_dir);
  const std::string ckpt = explore_dir(cfg);
  fs::create_directories(ckpt);

  const StagedLagrangeSystem sys =
      build_benchmark_system(cfg.n, cfg.R, cfg.R_lambda);
  ExploreConfig ec = cfg.make_explore(&g_stop);

  StageSet S0(0, ec.dedup_tol);
  const bool have_ckpt0 = stage_checkpoint_exists(ckpt, 0);
  if (cfg.resume && have_ckpt0) {
    // run_all loads stage 0 (and completed stages) from the checkpoints.
    std::printf("explore: resuming from checkpoints in %s\n", ckpt.c_str());
  } else if (have_ckpt0) {
    StageSet loaded(0, ec.dedup_tol);
    load_stage_checkpoint(ckpt, 0, loaded, nullptr);
    std::printf("explore: loaded %zu stage-0 vertices from checkpoint\n",
                loaded.size());
    std::uint64_t taken = 0;
    for (auto& v : loaded.snapshot()) {
      if (cfg.seed_limit && taken >= cfg.seed_limit) break;
      S0.insert(std::move(v));
      ++taken;
    }
    if (S0.size() < loaded.size())
      std::printf("explore: subsampled to the first %zu seeds\n", S0.size());
  } else if (fs::exists(seeds_dump_path(cfg))) {
    const auto t0 = std::chrono::steady_clock::now();
    std::uint64_t lifted = 0, failures = 0, seen = 0;
    load_seed_dump(
        seeds_dump_path(cfg),
        [&](const Pattern& p, std::uint64_t idx, const Eigen::VectorXd& g) {
          ++seen;
          if (cfg.seed_limit && lifted >= cfg.seed_limit) return;
          std::ostringstream prov;
          prov << "seed pattern=" << p.i[0];
          for (int k = 1; k < 5; ++k) prov << "," << p.i[k];
          prov << " idx=" << idx;
          if (const auto v = lift_seed(g, sys, nullptr, prov.str())) {
            S0.insert(*v);
            ++lifted;
          } else {
            ++failures;
          }
        });
    std::printf("explore: lifted %" PRIu64 "/%" PRIu64
                " dumped seeds (%" PRIu64 " failures) in %.1f s\n",
                lifted, seen, failures, elapsed_s(t0));
  } else {
    std::fprintf(stderr,
                 "explore: no seeds for n=%d under %s (expected %s or a "
                 "stage-0 checkpoint); run `gradcont seeds` first\n",
                 cfg.n, cfg.out_dir.c_str(), seeds_dump_path(cfg).c_str());
    return kExitUsage;
  }

  if (!(cfg.resume && have_ckpt0) && S0.size() == 0) {
    std::fprintf(stderr, "explore: stage-0 seed set is empty\n");
    return kExitUsage;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const ExploreOutcome out = run_all(sys, S0, ec, ckpt, cfg.resume);

  std::printf("explore: stage sizes:");
  for (std::size_t k = 0; k < out.stage_counts.size(); ++k)
    std::printf(" %zu:%zu", k, out.stage_counts[k]);
  std::printf("\n");
  if (out.resumed_through > 0)
    std::printf("explore: stages 1..%d loaded from checkpoints\n",
                out.resumed_through);
  if (!out.failures.empty()) {
    std::printf("explore: %zu per-vertex failures (first 5):\n",
                out.failures.size());
    for (std::size_t i = 0; i < out.failures.size() && i < 5; ++i)
      std::printf("  %s\n", out.failures[i].c_str());
  }

  if (out.interrupted) {
    std::printf("explore: interrupted after %.1f s; completed stages are "
                "checkpointed in %s (resume with --resume)\n",
                elapsed_s(t0), ckpt.c_str());
    return kExitInterrupted;
  }

  // Final vertices, merit ascending, de-homogenized coefficients.
  {
    std::ofstream csv(final_csv_path(cfg), std::ios::binary | std::ios::trunc);
    if (!csv.good())
      throw std::runtime_error("cannot write " + final_csv_path(cfg));
    csv << "id,stage,merit,residual";
    for (int i = 1; i <= cfg.n; ++i) csv << ",c" << i;
    csv << "\n";
    char buf[40];
    for (const Vertex& v : out.final_vertices) {
      csv << v.id << "," << v.stage;
      std::snprintf(buf, sizeof(buf), ",%.17g", v.merit);
      csv << buf;
      std::snprintf(buf, sizeof(buf), ",%.17g", v.residual);
      csv << buf;
      for (int i = 1; i <= cfg.n; ++i) {
        std::snprintf(buf, sizeof(buf), ",%.17g", v.z[i] / v.z[0]);
        csv << buf;
      }
      csv << "\n";
    }
    if (!csv.good())
      throw std::runtime_error("write failed: " + final_csv_path(cfg));
  }

  std::printf("explore: %zu final vertices in %.1f s -> %s\n",
              out.final_vertices.size(), elapsed_s(t0),
              final_csv_path(cfg).c_str());
  if (!out.final_vertices.empty()) {
    const Vertex& best = out.final_vertices.front();
    Eigen::VectorXd c(cfg.n);
    for (int i = 1; i <= cfg.n; ++i) c[i - 1] = best.z[i] / best.z[0];
    std::printf("explore: best merit %.12g (1-norm %.12g)\n", best.merit,
                c.lpNorm<1>());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

int cmd_verify(const std::string& file) {
  Eigen::VectorXd gamma;
  try {
    gamma = load_coeff_file(file);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "verify: %s\n", e.what());
    return kExitUsage;
  }

  const ConditionReport rep = verify(gamma);
  std::printf("file            : %s\n", file.c_str());
  std::printf("stages (n)      : %d\n", rep.n);
  std::printf("1-norm          : %.17g\n", rep.one_norm);
  std::printf("Euclidean norm  : %.17g\n", rep.euclid_norm);
  std::printf("max |half-sum|  : %.17g\n", rep.of2_value);
  std::printf("partial sums in [0,1]: %s\n", rep.cumsum_ok ? "yes" : "no");
  std::printf("symmetry max    : %.3e\n", rep.sym_max_abs);
  std::printf("order-condition residuals:\n");
  for (const auto& [label, value] : rep.order_residuals)
    std::printf("  %-10s %+.3e\n", label.c_str(), value);
  std::printf("max residual    : %.3e\n", rep.max_order_residual());

  const bool ok = rep.max_order_residual() <= 1e-10 && rep.sym_max_abs == 0.0;
  std::printf("verdict         : %s\n", ok ? "OK" : "FAILED");
  return ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// polish

struct PolishRow {
  std::string source;  // vertex id or file name
  Eigen::VectorXd gamma;
};

// The explored-vertex CSV (header id,stage,merit,residual,c1..cn) or a plain
// coefficient file.
std::vector<PolishRow> read_polish_input(const std::string& file) {
  std::ifstream in(file);
  if (!in.good()) throw std::runtime_error("cannot open input: " + file);
  std::string first;
  do {
    if (!std::getline(in, first))
      return {};  // empty file
  } while (first.empty() || first[0] == '#');

  std::vector<PolishRow> rows;
  if (first.rfind("id,", 0) == 0) {
    const int n_cols = static_cast<int>(
        std::count(first.begin(), first.end(), ',') + 1);
    const int n = n_cols - 4;
    if (n < 1) throw std::runtime_error("vertex CSV has no coefficient columns");
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (static_cast<int>(cells.size()) != n_cols)
        throw std::runtime_error(file + ":" + std::to_string(lineno) +
                                 ": expected " + std::to_string(n_cols) +
                                 " columns");
      PolishRow row;
      row.source = "vertex " + cells[0];
      row.gamma.resize(n);
      for (int i = 0; i < n; ++i) row.gamma[i] = std::stod(cells[4 + i]);
      rows.push_back(std::move(row));
    }
  } else {
    rows.push_back({fs::path(file).filename().string(), load_coeff_file(file)});
  }
  return rows;
}

int cmd_polish(const RunConfig& cfg, const std::string& file, int top_k) {
  std::vector<PolishRow> rows;
  try {
    rows = read_polish_input(file);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "polish: %s\n", e.what());
    return kExitUsage;
  }
  if (rows.empty()) {
    std::fprintf(stderr, "polish: no input rows in %s\n", file.c_str());
    return kExitFailure;
  }

  // Verify rows before polishing; drop rows that are not near-solutions.
  std::vector<PolishRow> valid;
  for (auto& row : rows) {
    const ConditionReport rep = verify(row.gamma);
    if (rep.max_order_residual() > 1e-8 || rep.sym_max_abs > 1e-8) {
      std::printf("polish: skipping %s (max residual %.3e, symmetry %.3e)\n",
                  row.source.c_str(), rep.max_order_residual(),
                  rep.sym_max_abs);
      continue;
    }
    valid.push_back(std::move(row));
  }
  if (valid.empty()) {
    std::fprintf(stderr, "polish: no input row satisfies the constraints\n");
    return kExitFailure;
  }

  std::sort(valid.begin(), valid.end(),
            [](const PolishRow& a, const PolishRow& b) {
              return a.gamma.lpNorm<1>() < b.gamma.lpNorm<1>();
            });
  if (static_cast<int>(valid.size()) > top_k) valid.resize(top_k);

  fs::create_directories(cfg.out_dir);
  std::printf("%-4s %-22s %-22s %-22s %-10s\n", "#", "source", "1-norm before",
              "1-norm after", "status");
  int successes = 0;
  for (std::size_t i = 0; i < valid.size(); ++i) {
    const PolishRow& row = valid[i];
    PolishResult res;
    try {
      res = polish_one_norm(row.gamma);
    } catch (const std::exception& e) {
      std::printf("%-4zu %-22s %-22.17g %-22s failed: %s\n", i + 1,
                  row.source.c_str(), row.gamma.lpNorm<1>(), "-", e.what());
      continue;
    }
    const char* status = res.status == PolishStatus::Ok          ? "ok"
                         : res.status == PolishStatus::SignFlip  ? "sign-flip"
                                                                 : "no-conv";
    std::printf("%-4zu %-22s %-22.17g %-22.17g %s", i + 1, row.source.c_str(),
                res.one_norm_before, res.one_norm_after, status);
    if (res.status == PolishStatus::Ok) {
      ++successes;
      const std::string out_file =
          (fs::path(cfg.out_dir) /
           ("polished_n" + std::to_string(row.gamma.size()) + "_" +
            std::to_string(i + 1) + ".txt"))
              .string();
      save_coeff_file(out_file, res.gamma);
      std::printf("  -> %s", out_file.c_str());
    } else {
      std::printf("  (%s)", res.message.c_str());
    }
    std::printf("\n");
  }
  std::printf("polish: %d of %zu refined\n", successes, valid.size());
  return successes > 0 ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const RunConfig& cfg) {
  bool found_any = false;

  if (fs::exists(seed_counts_path(cfg))) {
    found_any = true;
    std::ifstream csv(seed_counts_path(cfg));
    std::string line;
    std::getline(csv, line);  // header
    std::uint64_t total = 0;
    int patterns = 0;
    std::printf("seed counts (%s):\n", seed_counts_path(cfg).c_str());
    while (std::getline(csv, line)) {
      if (line.empty()) continue;
      ++patterns;
      std::stringstream ss(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() >= 4) total += std::stoull(cells[3]);
    }
    std::printf("  %d patterns, %" PRIu64 " accepted seeds\n", patterns,
                total);
    if (const auto it = kReferenceSeedTotals.find(cfg.n);
        it != kReferenceSeedTotals.end())
      std::printf("  reference total %" PRIu64 " (deviation %+.2f%%)\n",
                  it->second,
                  100.0 * (static_cast<double>(total) -
                           static_cast<double>(it->second)) /
                      static_cast<double>(it->second));
  }

  const std::string ckpt = explore_dir(cfg);
  if (fs::exists(ckpt)) {
    bool any_stage = false;
    std::string sizes;
    for (int k = 0; k <= 64; ++k) {
      const fs::path p =
          fs::path(ckpt) / ("stage_" + std::to_string(k) + ".jsonl");
      if (!fs::exists(p)) break;
      any_stage = true;
      std::ifstream f(p);
      std::size_t count = 0;
      std::string line;
      while (std::getline(f, line))
        if (!line.empty()) ++count;
      sizes += " " + std::to_string(k) + ":" + std::to_string(count);
    }
    if (any_stage) {
      found_any = true;
      std::printf("explore checkpoints (%s):%s\n", ckpt.c_str(), sizes.c_str());
    }
  }

  if (fs::exists(final_csv_path(cfg))) {
    found_any = true;
    std::ifstream csv(final_csv_path(cfg));
    std::string header, line;
    std::getline(csv, header);
    std::vector<std::string> lines;
    while (std::getline(csv, line))
      if (!line.empty()) lines.push_back(line);
    std::printf("final vertices (%s): %zu\n", final_csv_path(cfg).c_str(),
                lines.size());
    std::printf("  best by merit (up to 10):\n");
    for (std::size_t i = 0; i < lines.size() && i < 10; ++i) {
      std::stringstream ss(lines[i]);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() < 5) continue;
      double one_norm = 0.0;
      for (std::size_t j = 4; j < cells.size(); ++j)
        one_norm += std::abs(std::stod(cells[j]));
      std::printf("  id %-20s merit %-18s 1-norm %.15g\n", cells[0].c_str(),
                  cells[2].c_str(), one_norm);
    }
  }

  if (!found_any) {
    std::fprintf(stderr, "report: no artifacts for n=%d under %s\n", cfg.n,
                 cfg.out_dir.c_str());
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  install_signal_handlers();

  CLI::App app{"staged-continuation search for composition-method "
               "coefficients"};
  app.require_subcommand(1);

  CommonFlags seeds_flags, explore_flags, polish_flags, report_flags;
  bool count_only = false;
  std::string verify_file, polish_file;
  int top_k = 20;

  CLI::App* seeds = app.add_subcommand(
      "seeds", "enumerate, solve and filter seed candidates");
  add_common_flags(seeds, seeds_flags, true);
  seeds->add_flag("--count-only", count_only,
                  "skip lifting into stage-0 vertices (dump and counts are "
                  "still written)");

  CLI::App* explore =
      app.add_subcommand("explore", "run the staged continuation");
  add_common_flags(explore, explore_flags, true);

  CLI::App* verify_cmd = app.add_subcommand(
      "verify", "check a coefficient file against the order conditions");
  verify_cmd->add_option("file", verify_file, "coefficient file")->required();

  CLI::App* polish = app.add_subcommand(
      "polish", "1-norm refinement of explored vertices");
  polish->add_option("file", polish_file,
                     "vertex CSV from explore, or a coefficient file")
      ->required();
  polish->add_option("--top", top_k, "refine the K smallest 1-norms")
      ->default_val(20);
  add_common_flags(polish, polish_flags, false);

  CLI::App* report =
      app.add_subcommand("report", "summarize the artifacts of a run");
  add_common_flags(report, report_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (seeds->parsed()) return cmd_seeds(resolve_config(seeds_flags), count_only);
    if (explore->parsed()) return cmd_explore(resolve_config(explore_flags));
    if (verify_cmd->parsed()) return cmd_verify(verify_file);
    if (polish->parsed())
      return cmd_polish(resolve_config(polish_flags), polish_file, top_k);
    if (report->parsed()) return cmd_report(resolve_config(report_flags));
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
