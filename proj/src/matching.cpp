#include "rnm/matching.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

namespace rnm {

void AlignmentSets::add_entity(int a, int b) {
  ent_fwd[a] = b;
  ent_rev[b] = a;
}

void AlignmentSets::add_relation(int a, int b) {
  rel_fwd[a] = b;
  rel_rev[b] = a;
}

bool AlignmentSets::ent_contains(int a, int b) const {
  auto it = ent_fwd.find(a);
  return it != ent_fwd.end() && it->second == b;
}

bool AlignmentSets::rel_contains(int a, int b) const {
  auto it = rel_fwd.find(a);
  return it != rel_fwd.end() && it->second == b;
}

int AlignmentSets::ent_partner(int a) const {
  auto it = ent_fwd.find(a);
  return it == ent_fwd.end() ? -1 : it->second;
}

int AlignmentSets::rel_partner(int a) const {
  auto it = rel_fwd.find(a);
  return it == rel_fwd.end() ? -1 : it->second;
}

bool AlignmentSets::operator==(const AlignmentSets& other) const {
  return ent_fwd == other.ent_fwd && rel_fwd == other.rel_fwd;
}

double mapping_probability(int rel, int ent, const NeighborIndex& index) {
  return 1.0 / index.head_count(rel, ent);
}

double alignment_probability(int r1, int n1, int r2, int n2, const NeighborIndex& index) {
  return mapping_probability(r1, n1, index) * mapping_probability(r2, n2, index);
}

double neighborhood_match_score(int e1, int e2, const AlignmentSets& sets, const Indexes& indexes,
                                const MatchConfig& cfg) {
  const NeighborIndex& nb = indexes.neighbors;
  double denom = nb.neighbor_count(e1) + nb.neighbor_count(e2);
  if (denom == 0.0) return 0.0;

  double total = 0.0;
  if (cfg.relation_aware) {
    // L_e and L_r are one-to-one, so the only tuple in C that can land in M
    // for a given out-edge (r1, n1) of e1 is (partner(r1), partner(n1)).
    for (auto [r1, n1] : nb.out_edges[e1]) {
      int n2 = sets.ent_partner(n1);
      if (n2 < 0) continue;
      int r2 = sets.rel_partner(r1);
      if (r2 < 0) continue;
      if (!nb.has_edge(e2, r2, n2)) continue;
      total += cfg.use_alignment_prob ? alignment_probability(r1, n1, r2, n2, nb) : 1.0;
    }
  } else {
    const auto& n2_set = nb.neighbors[e2];
    for (int n1 : nb.neighbors[e1]) {
      int n2 = sets.ent_partner(n1);
      if (n2 < 0) continue;
      if (std::binary_search(n2_set.begin(), n2_set.end(), n2)) total += 1.0;
    }
  }
  return total / denom;
}

double update_entity_distance(double embedding_distance, double match_score, double lambda_e) {
  return embedding_distance - lambda_e * match_score;
}

double relation_match_score(int r1, int r2, const AlignmentSets& sets, const Indexes& indexes) {
  const RelationPairIndex& rp = indexes.rel_pairs;
  double denom = rp.pair_count(r1) + rp.pair_count(r2);
  if (denom == 0.0) return 0.0;
  int matched = 0;
  for (auto [h1, t1] : rp.pairs[r1]) {
    int h2 = sets.ent_partner(h1);
    if (h2 < 0) continue;
    int t2 = sets.ent_partner(t1);
    if (t2 < 0) continue;
    if (rp.contains(r2, h2, t2)) ++matched;
  }
  return matched / denom;
}

double update_relation_distance(double embedding_distance, double match_score, double lambda_r) {
  return embedding_distance - lambda_r * match_score;
}

std::vector<std::vector<std::pair<int, double>>> candidate_pairs(const Matrix& rows, int lo1,
                                                                 int hi1, int lo2, int hi2,
                                                                 int count, int threads) {
  if (count < 1) throw std::invalid_argument("candidate count must be >= 1");
  const int n1 = hi1 - lo1;
  std::vector<std::vector<std::pair<int, double>>> out(n1);

  auto scan = [&](int begin, int end) {
    std::vector<std::pair<double, int>> scored;
    for (int i = begin; i < end; ++i) {
      scored.clear();
      scored.reserve(hi2 - lo2);
      for (int j = lo2; j < hi2; ++j)
        scored.emplace_back((rows.row(lo1 + i) - rows.row(j)).cwiseAbs().sum(), j);
      int keep = std::min<int>(count, static_cast<int>(scored.size()));
      std::partial_sort(scored.begin(), scored.begin() + keep, scored.end());
      out[i].reserve(keep);
      for (int k = 0; k < keep; ++k) out[i].emplace_back(scored[k].second, scored[k].first);
    }
  };

  threads = std::max(1, threads);
  if (threads == 1 || n1 < 2 * threads) {
    scan(0, n1);
  } else {
    std::vector<std::thread> workers;
    int chunk = (n1 + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      int begin = t * chunk, end = std::min(n1, begin + chunk);
      if (begin >= end) break;
      workers.emplace_back(scan, begin, end);
    }
    for (auto& w : workers) w.join();
  }
  return out;
}

}  // namespace rnm
