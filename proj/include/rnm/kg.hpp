#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rnm/types.hpp"

namespace rnm {

struct Triple {
  int head;
  int rel;
  int tail;
  bool operator==(const Triple&) const = default;
};

/// One knowledge graph with dense integer id spaces. Source ids / names from
/// the input files are kept as side tables indexed by the dense id.
struct KnowledgeGraph {
  int num_entities = 0;
  int num_relations = 0;
  std::vector<Triple> triples;

  std::vector<long long> entity_src_ids;
  std::vector<std::string> entity_names;
  std::vector<long long> relation_src_ids;
  std::vector<std::string> relation_names;

  // Number of pre-augmentation relations; 0 while the graph is unaugmented.
  // After add_reverse_relations, relation r >= forward_relations is the
  // reverse of r - forward_relations.
  int forward_relations = 0;

  bool augmented() const { return forward_relations > 0; }
  bool is_reverse(int r) const { return augmented() && r >= forward_relations; }
  int reverse_of(int r) const {
    return r < forward_relations ? r + forward_relations : r - forward_relations;
  }
  // Folds a reverse relation onto its forward counterpart.
  int fold(int r) const { return is_reverse(r) ? r - forward_relations : r; }

  /// Checks the id-space and duplicate invariants; throws on violation.
  void validate() const;
};

/// Adds the reverse triple (t, r^-1, h) for every (h, r, t). Doubles both the
/// relation and the triple count. Throws if already augmented.
KnowledgeGraph add_reverse_relations(const KnowledgeGraph& kg);

/// Two KGs sharing one global entity id space: g2 entities are shifted by
/// |E1|, g2 relations by |R1|. No cross-KG edges exist.
struct GraphPair {
  KnowledgeGraph g1;
  KnowledgeGraph g2;

  int entity_offset() const { return g1.num_entities; }
  int total_entities() const { return g1.num_entities + g2.num_entities; }
  int relation_offset() const { return g1.num_relations; }
  int total_relations() const { return g1.num_relations + g2.num_relations; }

  bool in_g2_entity(int global_ent) const { return global_ent >= entity_offset(); }
  bool in_g2_relation(int global_rel) const { return global_rel >= relation_offset(); }
};

GraphPair add_reverse_relations(const GraphPair& pair);

/// One-hop structure over the global id space: neighbor sets N_e, per-entity
/// (relation, neighbor) incidence lists, and the head counts |{e : (e,r,n)}|
/// that the mapping probabilities divide by.
struct NeighborIndex {
  std::vector<std::vector<int>> neighbors;                   // N_e, sorted distinct
  std::vector<std::vector<std::pair<int, int>>> out_edges;   // (rel, tail), sorted distinct
  std::unordered_map<std::uint64_t, int> head_counts;        // (rel, tail) -> #heads

  int neighbor_count(int ent) const { return static_cast<int>(neighbors[ent].size()); }

  /// |{e : (e, rel, tail) in T}|. Throws if (rel, tail) never occurs.
  int head_count(int rel, int tail) const;

  bool has_edge(int ent, int rel, int tail) const;
};

/// Per relation r, the distinct entity pairs S_r = {(h,t) | (h,r,t) in T}.
struct RelationPairIndex {
  std::vector<std::vector<std::pair<int, int>>> pairs;           // sorted distinct
  std::vector<std::unordered_set<std::uint64_t>> pair_sets;      // same pairs, hashed

  int pair_count(int rel) const { return static_cast<int>(pairs[rel].size()); }
  bool contains(int rel, int h, int t) const {
    return pair_sets[rel].count(pair_key(h, t)) > 0;
  }
};

struct Indexes {
  NeighborIndex neighbors;
  RelationPairIndex rel_pairs;
};

/// Materializes both indexes from the triple store. Requires augmented graphs.
Indexes build_indexes(const GraphPair& pair);

}  // namespace rnm
