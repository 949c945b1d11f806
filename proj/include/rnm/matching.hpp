#pragma once

#include <unordered_map>
#include <utility>
#include <vector>

#include "rnm/config.hpp"
#include "rnm/kg.hpp"
#include "rnm/types.hpp"

namespace rnm {

// Partial one-to-one maps between KG1 and KG2 ids (both in the global space).
struct AlignmentSets {
  std::unordered_map<int, int> ent_fwd;
  std::unordered_map<int, int> ent_rev;
  std::unordered_map<int, int> rel_fwd;
  std::unordered_map<int, int> rel_rev;

  void add_entity(int a, int b);
  void add_relation(int a, int b);
  bool ent_contains(int a, int b) const;
  bool rel_contains(int a, int b) const;
  int ent_partner(int a) const;  // -1 when unmatched
  int rel_partner(int a) const;
  bool operator==(const AlignmentSets& other) const;
};

// 1 / head-count(r, n); (r, n) must occur in the triple store.
double mapping_probability(int rel, int ent, const NeighborIndex& index);

double alignment_probability(int r1, int n1, int r2, int n2, const NeighborIndex& index);

// Summed alignment probabilities of matched neighbor tuples, over the joint
// neighborhood size. Variant behavior per MatchConfig: use_alignment_prob=false
// counts matched tuples instead of summing probabilities; relation_aware=false
// matches aligned neighbors only, ignoring relations.
double neighborhood_match_score(int e1, int e2, const AlignmentSets& sets, const Indexes& indexes,
                                const MatchConfig& cfg);

double update_entity_distance(double embedding_distance, double match_score, double lambda_e);

// Fraction of matched (head, tail) pairs over the joint triple-set size.
double relation_match_score(int r1, int r2, const AlignmentSets& sets, const Indexes& indexes);

double update_relation_distance(double embedding_distance, double match_score, double lambda_r);

// candidates[i]: for KG1 id i, the `count` nearest KG2 rows by L1 distance,
// ascending, ties by lower id. Targets are global ids.
std::vector<std::vector<std::pair<int, double>>> candidate_pairs(const Matrix& rows, int lo1,
                                                                 int hi1, int lo2, int hi2,
                                                                 int count, int threads);

}  // namespace rnm
