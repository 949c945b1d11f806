#include "rnm/kg.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace rnm {

void KnowledgeGraph::validate() const {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(triples.size() * 2);
  for (const Triple& t : triples) {
    if (t.head < 0 || t.head >= num_entities || t.tail < 0 || t.tail >= num_entities)
      throw std::runtime_error("triple references unregistered entity id");
    if (t.rel < 0 || t.rel >= num_relations)
      throw std::runtime_error("triple references unregistered relation id");
    // Two triples never share (h, r) and t: key on (h, r) x t via two-level hash.
    std::uint64_t hr = pair_key(t.head, t.rel);
    std::uint64_t key = hr * 1000003u + static_cast<std::uint32_t>(t.tail);
    if (!seen.insert(key).second) throw std::runtime_error("duplicate triple");
  }
}

KnowledgeGraph add_reverse_relations(const KnowledgeGraph& kg) {
  if (kg.augmented()) throw std::invalid_argument("graph is already reverse-augmented");
  KnowledgeGraph out = kg;
  out.forward_relations = kg.num_relations;
  out.num_relations = kg.num_relations * 2;
  out.triples.reserve(kg.triples.size() * 2);
  for (const Triple& t : kg.triples)
    out.triples.push_back({t.tail, t.rel + kg.num_relations, t.head});
  out.relation_src_ids.reserve(out.num_relations);
  out.relation_names.reserve(out.num_relations);
  for (int r = 0; r < kg.num_relations; ++r) {
    out.relation_src_ids.push_back(r < static_cast<int>(kg.relation_src_ids.size())
                                       ? kg.relation_src_ids[r]
                                       : r);
    out.relation_names.push_back(
        (r < static_cast<int>(kg.relation_names.size()) ? kg.relation_names[r]
                                                        : std::to_string(r)) +
        "^-1");
  }
  return out;
}

GraphPair add_reverse_relations(const GraphPair& pair) {
  return {add_reverse_relations(pair.g1), add_reverse_relations(pair.g2)};
}

int NeighborIndex::head_count(int rel, int tail) const {
  auto it = head_counts.find(pair_key(rel, tail));
  if (it == head_counts.end())
    throw std::logic_error("head_count queried for a (relation, neighbor) pair that never occurs");
  return it->second;
}

bool NeighborIndex::has_edge(int ent, int rel, int tail) const {
  const auto& edges = out_edges[ent];
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(rel, tail));
}

Indexes build_indexes(const GraphPair& pair) {
  if (!pair.g1.augmented() || !pair.g2.augmented())
    throw std::invalid_argument("build_indexes requires reverse-augmented graphs");

  const int n = pair.total_entities();
  const int num_rel = pair.total_relations();

  Indexes idx;
  idx.neighbors.neighbors.resize(n);
  idx.neighbors.out_edges.resize(n);
  idx.rel_pairs.pairs.resize(num_rel);
  idx.rel_pairs.pair_sets.resize(num_rel);

  auto ingest = [&](const KnowledgeGraph& kg, int ent_off, int rel_off) {
    for (const Triple& t : kg.triples) {
      int h = t.head + ent_off;
      int r = t.rel + rel_off;
      int n2 = t.tail + ent_off;
      idx.neighbors.neighbors[h].push_back(n2);
      idx.neighbors.out_edges[h].emplace_back(r, n2);
      idx.rel_pairs.pairs[r].emplace_back(h, n2);
    }
  };
  ingest(pair.g1, 0, 0);
  ingest(pair.g2, pair.entity_offset(), pair.relation_offset());

  for (auto& nbrs : idx.neighbors.neighbors) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  for (auto& edges : idx.neighbors.out_edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  }
  idx.neighbors.head_counts.reserve(pair.g1.triples.size() + pair.g2.triples.size());
  for (int e = 0; e < n; ++e)
    for (const auto& [r, tail] : idx.neighbors.out_edges[e])
      ++idx.neighbors.head_counts[pair_key(r, tail)];

  for (int r = 0; r < num_rel; ++r) {
    auto& p = idx.rel_pairs.pairs[r];
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    auto& set = idx.rel_pairs.pair_sets[r];
    set.reserve(p.size() * 2);
    for (const auto& [h, t] : p) set.insert(pair_key(h, t));
  }
  return idx;
}

}  // namespace rnm
