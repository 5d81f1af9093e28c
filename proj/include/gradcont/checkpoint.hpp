#pragma once

#include <string>
#include <vector>

#include "gradcont/explorer.hpp"

namespace gradcont {

// Checkpoint directory layout:
//   stage_<k>.jsonl : one JSON object per vertex,
//                     {id, stage, gamma[], lambda[], merit, residual, parent}
//   edges_<k>.csv   : header "from_id,to_id,stage", one row per edge whose
//                     target has stage k
// Files are written to a .tmp sibling and renamed into place, so a file that
// exists is always complete; a stage counts as checkpointed when its .jsonl
// is present.

bool stage_checkpoint_exists(const std::string& dir, int stage);

// n splits each stored z into gamma (n+1 leading) and lambda (rest).
void write_stage_checkpoint(const std::string& dir, const StageSet& set,
                            const std::vector<Edge>& stage_edges, int n);

// Inserts the stage's vertices into `out` (whose stage must match) and, when
// `edges` is non-null, appends the stage's edges.  Throws on parse errors.
void load_stage_checkpoint(const std::string& dir, int stage, StageSet& out,
                           std::vector<Edge>* edges);

// Removes every stage_*.jsonl / edges_*.csv in dir (fresh-run cleanup).
void clear_checkpoints(const std::string& dir);

}  // namespace gradcont
