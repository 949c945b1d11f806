#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rnm/config.hpp"
#include "rnm/kg.hpp"
#include "rnm/matching.hpp"
#include "rnm/training.hpp"

namespace rnm {

struct CandEntry {
  int target;   // global KG2 id
  double base;  // raw embedding L1 distance
  double dist;  // current updated distance
};

// Candidate-restricted distance structures. Row i of ent holds the candidates
// of KG1 entity i sorted ascending by (dist, target); rel likewise per KG1
// relation in the augmented space. Seed rows are pinned: the partner at
// distance 0 is the only candidate.
struct DistanceState {
  std::vector<std::vector<CandEntry>> ent;
  std::vector<std::vector<CandEntry>> rel;
  std::unordered_map<int, int> seed_partner;

  bool is_seed(int e1) const { return seed_partner.count(e1) > 0; }
};

DistanceState init_distances(const EmbeddingState& emb,
                             const std::vector<std::pair<int, int>>& seeds, const GraphPair& pair,
                             const MatchConfig& cfg, int threads);

// One set-update pass: per-source front candidate, threshold admission,
// conflict resolution by smaller distance (ties by lower source id). Seed
// pairs are always admitted and never lose a conflict.
AlignmentSets update_alignment_sets(const DistanceState& state, const IterConfig& cfg);

void update_entity_distances(DistanceState& state, const AlignmentSets& sets,
                             const Indexes& indexes, const MatchConfig& cfg, int threads);

void update_relation_distances(DistanceState& state, const AlignmentSets& sets,
                               const Indexes& indexes, const MatchConfig& cfg, int threads);

struct IterationMetrics {
  int iteration = 0;
  int ent_aligned = 0;
  int rel_aligned = 0;
  bool converged = false;
  double ent_hits1 = -1.0;  // filled by the caller's hook when truth is known
  double rel_hits1 = -1.0;
};

struct IterateResult {
  DistanceState state;
  AlignmentSets sets;
  std::vector<IterationMetrics> metrics;
};

using IterationHook =
    std::function<void(const DistanceState&, const AlignmentSets&, IterationMetrics&)>;

// Alternates alignment-set updates and distance updates until the sets
// repeat or max_iters passes run. The hook fires after each completed
// iteration's distance updates.
IterateResult run_iterations(DistanceState state, const Indexes& indexes, const MatchConfig& mcfg,
                             const IterConfig& icfg, int threads,
                             const IterationHook& hook = nullptr);

// Versioned binary dump of distances, alignment sets and the source-id tables
// needed to score the dump against an external truth file.
void save_state(const DistanceState& state, const AlignmentSets& sets, const GraphPair& pair,
                const std::string& path);

struct LoadedState {
  DistanceState state;
  AlignmentSets sets;
  std::vector<long long> ent_src_1, ent_src_2;
  std::vector<long long> rel_src_1, rel_src_2;
  int entity_offset = 0;
  int relation_offset = 0;
  int forward_relations_1 = 0;
  int forward_relations_2 = 0;
};

LoadedState load_state(const std::string& path);

// "id1<TAB>id2<TAB>distance" per admitted pair in source-id terms, entities
// and relations in separate files.
void write_alignment_files(const DistanceState& state, const AlignmentSets& sets,
                           const GraphPair& pair, const std::string& entities_path,
                           const std::string& relations_path);

}  // namespace rnm
