#include "gradcont/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fs = std::filesystem;

namespace gradcont {

namespace {

fs::path stage_file(const std::string& dir, int stage) {
  return fs::path(dir) / ("stage_" + std::to_string(stage) + ".jsonl");
}

fs::path edges_file(const std::string& dir, int stage) {
  return fs::path(dir) / ("edges_" + std::to_string(stage) + ".csv");
}

void commit(const fs::path& tmp, const fs::path& final_path) {
  fs::rename(tmp, final_path);  // atomic replace on POSIX
}

}  // namespace

bool stage_checkpoint_exists(const std::string& dir, int stage) {
  return fs::exists(stage_file(dir, stage));
}

void write_stage_checkpoint(const std::string& dir, const StageSet& set,
                            const std::vector<Edge>& stage_edges, int n) {
  fs::create_directories(dir);

  const fs::path vfinal = stage_file(dir, set.stage());
  const fs::path vtmp = vfinal.string() + ".tmp";
  {
    std::ofstream os(vtmp);
    if (!os) throw std::runtime_error("checkpoint: cannot write " + vtmp.string());
    for (const Vertex& v : set.snapshot()) {
      nlohmann::json rec;
      rec["id"] = v.id;
      rec["stage"] = v.stage;
      rec["gamma"] = std::vector<double>(v.z.data(), v.z.data() + n + 1);
      rec["lambda"] =
          std::vector<double>(v.z.data() + n + 1, v.z.data() + v.z.size());
      rec["merit"] = v.merit;
      rec["residual"] = v.residual;
      rec["parent"] = v.provenance;
      os << rec.dump() << '\n';
    }
    if (!os) throw std::runtime_error("checkpoint: write failed on " + vtmp.string());
  }

  const fs::path efinal = edges_file(dir, set.stage());
  const fs::path etmp = efinal.string() + ".tmp";
  {
    std::ofstream os(etmp);
    if (!os) throw std::runtime_error("checkpoint: cannot write " + etmp.string());
    os << "from_id,to_id,stage\n";
    for (const Edge& e : stage_edges)
      os << e.from << ',' << e.to << ',' << e.stage << '\n';
    if (!os) throw std::runtime_error("checkpoint: write failed on " + etmp.string());
  }

  commit(vtmp, vfinal);
  commit(etmp, efinal);
}

void load_stage_checkpoint(const std::string& dir, int stage, StageSet& out,
                           std::vector<Edge>* edges) {
  if (out.stage() != stage)
    throw std::invalid_argument("load_stage_checkpoint: StageSet stage mismatch");

  std::ifstream is(stage_file(dir, stage));
  if (!is)
    throw std::runtime_error("checkpoint: missing " + stage_file(dir, stage).string());
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const nlohmann::json rec = nlohmann::json::parse(line);
    const auto gamma = rec.at("gamma").get<std::vector<double>>();
    const auto lambda = rec.at("lambda").get<std::vector<double>>();
    Vertex v;
    v.id = rec.at("id").get<std::uint64_t>();
    v.stage = rec.at("stage").get<int>();
    v.z.resize(static_cast<Eigen::Index>(gamma.size() + lambda.size()));
    for (std::size_t i = 0; i < gamma.size(); ++i) v.z[static_cast<Eigen::Index>(i)] = gamma[i];
    for (std::size_t i = 0; i < lambda.size(); ++i)
      v.z[static_cast<Eigen::Index>(gamma.size() + i)] = lambda[i];
    v.merit = rec.at("merit").get<double>();
    v.residual = rec.at("residual").get<double>();
    v.provenance = rec.at("parent").get<std::string>();
    if (v.stage != stage)
      throw std::runtime_error("checkpoint: stage mismatch inside " +
                               stage_file(dir, stage).string());
    out.insert(std::move(v));
  }

  if (!edges) return;
  std::ifstream es(edges_file(dir, stage));
  if (!es) return;  // edge log is optional on load
  std::getline(es, line);  // header
  while (std::getline(es, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Edge e;
    char c1 = 0, c2 = 0;
    if (!(ls >> e.from >> c1 >> e.to >> c2 >> e.stage) || c1 != ',' || c2 != ',')
      throw std::runtime_error("checkpoint: bad edge row '" + line + "'");
    edges->push_back(e);
  }
}

void clear_checkpoints(const std::string& dir) {
  if (!fs::exists(dir)) return;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    const bool stage_json =
        name.rfind("stage_", 0) == 0 && name.size() > 6 &&
        name.find(".jsonl") != std::string::npos;
    const bool edge_csv = name.rfind("edges_", 0) == 0 &&
                          name.find(".csv") != std::string::npos;
    if (stage_json || edge_csv) fs::remove(entry.path());
  }
}

}  // namespace gradcont
