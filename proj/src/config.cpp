#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "gradcont/config.hpp"

namespace gradcont {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// One mutable view per key: parse a value string into the field, and render
// the field back.  Both directions live in one table so the key set cannot
// drift between load and save.
struct KeyBinding {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

double parse_double(const std::string& v) {
  std::size_t used = 0;
  const double x = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("trailing characters");
  return x;
}

long long parse_int(const std::string& v) {
  std::size_t used = 0;
  const long long x = std::stoll(v, &used);
  if (used != v.size()) throw std::invalid_argument("trailing characters");
  return x;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected a boolean (true/false)");
}

KeyBinding bind_double(double RunConfig::* f) {
  return {[f](RunConfig& c, const std::string& v) { c.*f = parse_double(v); },
          [f](const RunConfig& c) { return fmt_double(c.*f); }};
}

KeyBinding bind_int(int RunConfig::* f) {
  return {[f](RunConfig& c, const std::string& v) {
            c.*f = static_cast<int>(parse_int(v));
          },
          [f](const RunConfig& c) { return std::to_string(c.*f); }};
}

template <typename Sub>
KeyBinding bind_sub_double(Sub RunConfig::* sub, double Sub::* f) {
  return {[sub, f](RunConfig& c, const std::string& v) {
            (c.*sub).*f = parse_double(v);
          },
          [sub, f](const RunConfig& c) { return fmt_double((c.*sub).*f); }};
}

template <typename Sub>
KeyBinding bind_sub_int(Sub RunConfig::* sub, int Sub::* f) {
  return {[sub, f](RunConfig& c, const std::string& v) {
            (c.*sub).*f = static_cast<int>(parse_int(v));
          },
          [sub, f](const RunConfig& c) {
            return std::to_string((c.*sub).*f);
          }};
}

const std::map<std::string, KeyBinding>& key_table() {
  static const std::map<std::string, KeyBinding> table = [] {
    std::map<std::string, KeyBinding> t;
    t["n"] = bind_int(&RunConfig::n);
    t["threads"] = bind_int(&RunConfig::threads);
    t["solver_starts"] = bind_int(&RunConfig::solver_starts);
    t["R"] = bind_double(&RunConfig::R);
    t["R_lambda"] = bind_double(&RunConfig::R_lambda);
    t["out_dir"] = {
        [](RunConfig& c, const std::string& v) { c.out_dir = v; },
        [](const RunConfig& c) { return c.out_dir; }};
    t["resume"] = {
        [](RunConfig& c, const std::string& v) { c.resume = parse_bool(v); },
        [](const RunConfig& c) -> std::string {
          return c.resume ? "true" : "false";
        }};
    t["rng_seed"] = {
        [](RunConfig& c, const std::string& v) {
          c.rng_seed = static_cast<std::uint64_t>(std::stoull(v));
        },
        [](const RunConfig& c) { return std::to_string(c.rng_seed); }};
    t["seed_limit"] = {
        [](RunConfig& c, const std::string& v) {
          c.seed_limit = static_cast<std::uint64_t>(std::stoull(v));
        },
        [](const RunConfig& c) { return std::to_string(c.seed_limit); }};
    t["stage_order"] = {
        [](RunConfig& c, const std::string& v) {
          c.stage_order.clear();
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty())
              c.stage_order.push_back(static_cast<int>(parse_int(item)));
          }
        },
        [](const RunConfig& c) {
          std::string out;
          for (std::size_t i = 0; i < c.stage_order.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(c.stage_order[i]);
          }
          return out;
        }};

    t["filter.N_max"] = bind_sub_double(&RunConfig::filter, &SeedFilter::N_max);
    t["filter.of2_max"] =
        bind_sub_double(&RunConfig::filter, &SeedFilter::of2_max);
    t["filter.cumsum_lo"] =
        bind_sub_double(&RunConfig::filter, &SeedFilter::cumsum_lo);
    t["filter.cumsum_hi"] =
        bind_sub_double(&RunConfig::filter, &SeedFilter::cumsum_hi);

    t["explore.G_max"] =
        bind_sub_double(&RunConfig::explore, &ExploreConfig::G_max);
    t["explore.dedup_tol"] =
        bind_sub_double(&RunConfig::explore, &ExploreConfig::dedup_tol);
    t["explore.accept_tol"] =
        bind_sub_double(&RunConfig::explore, &ExploreConfig::accept_tol);
    t["explore.pipelined"] = {
        [](RunConfig& c, const std::string& v) {
          c.explore.pipelined = parse_bool(v);
        },
        [](const RunConfig& c) -> std::string {
          return c.explore.pipelined ? "true" : "false";
        }};

    t["tracker.h0"] = bind_sub_double(&RunConfig::tracker, &TrackerConfig::h0);
    t["tracker.h_min"] =
        bind_sub_double(&RunConfig::tracker, &TrackerConfig::h_min);
    t["tracker.h_max"] =
        bind_sub_double(&RunConfig::tracker, &TrackerConfig::h_max);
    t["tracker.newton_tol"] =
        bind_sub_double(&RunConfig::tracker, &TrackerConfig::newton_tol);
    t["tracker.target_iters"] =
        bind_sub_int(&RunConfig::tracker, &TrackerConfig::target_iters);
    t["tracker.max_iters"] =
        bind_sub_int(&RunConfig::tracker, &TrackerConfig::max_iters);
    t["tracker.max_consecutive_rejects"] = bind_sub_int(
        &RunConfig::tracker, &TrackerConfig::max_consecutive_rejects);
    t["tracker.L_max"] =
        bind_sub_double(&RunConfig::tracker, &TrackerConfig::L_max);
    t["tracker.ell_max"] =
        bind_sub_int(&RunConfig::tracker, &TrackerConfig::ell_max);
    t["tracker.closure_tol"] =
        bind_sub_double(&RunConfig::tracker, &TrackerConfig::closure_tol);
    t["tracker.min_closure_arclength"] = bind_sub_double(
        &RunConfig::tracker, &TrackerConfig::min_closure_arclength);
    return t;
  }();
  return table;
}

}  // namespace

void RunConfig::validate() const {
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
  if (n < 1) throw std::invalid_argument("n must be positive");
  if (solver_starts < 1)
    throw std::invalid_argument("solver_starts must be at least 1");
  if (!(R > 0.0) || !(R_lambda > 0.0))
    throw std::invalid_argument("sphere radii must be positive");
  if (!(filter.N_max > 0.0))
    throw std::invalid_argument("filter.N_max must be positive");
  if (!(filter.cumsum_lo <= filter.cumsum_hi))
    throw std::invalid_argument("filter cumsum window is empty");
  if (!(filter.of2_max > 0.0))
    throw std::invalid_argument("filter.of2_max must be positive");
  tracker.validate();
  make_explore().validate();
}

ExploreConfig RunConfig::make_explore(const std::atomic<bool>* stop) const {
  ExploreConfig ec = explore;
  ec.tracker = tracker;
  ec.max_inflight = threads;
  ec.stop = stop;
  return ec;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in.good())
    throw std::runtime_error("cannot open config file: " + path);

  RunConfig cfg;
  const auto& table = key_table();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected `key = value`, got: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    const auto it = table.find(key);
    if (it == table.end())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": unknown key: " + key);
    try {
      it->second.set(cfg, value);
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": bad value for " + key + ": " + e.what());
    }
  }
  return cfg;
}

void save_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.good())
    throw std::runtime_error("cannot write config file: " + path);
  out << "# gradcont run configuration\n";
  for (const auto& [key, binding] : key_table())
    out << key << " = " << binding.get(cfg) << "\n";
  if (!out.good())
    throw std::runtime_error("config write failed: " + path);
}

}  // namespace gradcont
