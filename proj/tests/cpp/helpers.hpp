#pragma once

#include <unistd.h>

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "rnm/config.hpp"
#include "rnm/eval.hpp"
#include "rnm/iterate.hpp"
#include "rnm/kg.hpp"
#include "rnm/matching.hpp"
#include "rnm/types.hpp"

// Builders and independent oracles shared across the suites. The oracles
// restate the definitions as naive scans over raw triples so they cannot
// share code (or bugs) with the library paths they check.
namespace testutil {

inline rnm::KnowledgeGraph make_kg(int entities, int relations,
                                   std::vector<rnm::Triple> triples) {
  rnm::KnowledgeGraph kg;
  kg.num_entities = entities;
  kg.num_relations = relations;
  kg.triples = std::move(triples);
  for (int e = 0; e < entities; ++e) {
    kg.entity_src_ids.push_back(e);
    kg.entity_names.push_back("e" + std::to_string(e));
  }
  for (int r = 0; r < relations; ++r) {
    kg.relation_src_ids.push_back(r);
    kg.relation_names.push_back("r" + std::to_string(r));
  }
  kg.validate();
  return kg;
}

// Random KG where every relation occurs at least once.
inline rnm::KnowledgeGraph random_kg(std::mt19937_64& rng, int max_entities, int max_relations,
                                     double mean_degree = 2.0) {
  std::uniform_int_distribution<int> n_ent(3, std::max(3, max_entities));
  std::uniform_int_distribution<int> n_rel(1, std::max(1, max_relations));
  const int entities = n_ent(rng), relations = n_rel(rng);
  std::uniform_int_distribution<int> ent(0, entities - 1), rel(0, relations - 1);

  std::set<std::array<int, 3>> seen;
  for (int r = 0; r < relations; ++r) {
    while (true) {
      int h = ent(rng), t = ent(rng);
      if (h != t) {
        seen.insert({h, r, t});
        break;
      }
    }
  }
  const int want = std::max(relations, static_cast<int>(entities * mean_degree));
  for (int tries = 0; tries < want * 30 && static_cast<int>(seen.size()) < want; ++tries) {
    int h = ent(rng), t = ent(rng);
    if (h != t) seen.insert({h, rel(rng), t});
  }
  std::vector<rnm::Triple> triples;
  triples.reserve(seen.size());
  for (const auto& [h, r, t] : seen) triples.push_back({h, r, t});
  return make_kg(entities, relations, std::move(triples));
}

inline rnm::GraphPair random_pair(std::mt19937_64& rng, int max_entities, int max_relations,
                                  double mean_degree = 2.0) {
  rnm::GraphPair pair;
  pair.g1 = random_kg(rng, max_entities, max_relations, mean_degree);
  pair.g2 = random_kg(rng, max_entities, max_relations, mean_degree);
  return pair;
}

// Random partial one-to-one alignment over an augmented pair's global ids.
inline rnm::AlignmentSets random_sets(std::mt19937_64& rng, const rnm::GraphPair& pair,
                                      double ent_frac, double rel_frac) {
  rnm::AlignmentSets sets;
  auto sample = [&](int n1, int n2, int off2, double frac, auto add) {
    std::vector<int> left(n1), right(n2);
    std::iota(left.begin(), left.end(), 0);
    std::iota(right.begin(), right.end(), 0);
    std::shuffle(left.begin(), left.end(), rng);
    std::shuffle(right.begin(), right.end(), rng);
    int n = static_cast<int>(std::min(n1, n2) * frac);
    for (int i = 0; i < n; ++i) add(left[i], right[i] + off2);
  };
  sample(pair.g1.num_entities, pair.g2.num_entities, pair.entity_offset(), ent_frac,
         [&](int a, int b) { sets.add_entity(a, b); });
  sample(pair.g1.num_relations, pair.g2.num_relations, pair.relation_offset(), rel_frac,
         [&](int a, int b) { sets.add_relation(a, b); });
  return sets;
}

inline bool same_matrix(const rnm::Matrix& a, const rnm::Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.size() == 0 || (a.array() == b.array()).all());
}

inline double max_abs_diff(const rnm::Matrix& a, const rnm::Matrix& b) {
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

// All triples of a pair in global ids.
inline std::vector<std::array<int, 3>> global_triples(const rnm::GraphPair& pair) {
  std::vector<std::array<int, 3>> out;
  for (const auto& t : pair.g1.triples) out.push_back({t.head, t.rel, t.tail});
  const int eo = pair.entity_offset(), ro = pair.relation_offset();
  for (const auto& t : pair.g2.triples) out.push_back({t.head + eo, t.rel + ro, t.tail + eo});
  return out;
}

inline std::set<int> oracle_neighbors(const rnm::GraphPair& pair, int e) {
  std::set<int> ns;
  for (const auto& t : global_triples(pair)) {
    if (t[0] == e) ns.insert(t[2]);
    if (t[2] == e) ns.insert(t[0]);
  }
  return ns;
}

inline int oracle_head_count(const rnm::GraphPair& pair, int rel, int tail) {
  std::set<int> heads;
  for (const auto& t : global_triples(pair))
    if (t[1] == rel && t[2] == tail) heads.insert(t[0]);
  return static_cast<int>(heads.size());
}

// Definition applied literally: enumerate every out-edge pair of (e1, e2),
// keep the tuples whose neighbor and relation are both aligned, sum the
// probability product (or count under the no-probability variant).
inline double oracle_match_score(int e1, int e2, const rnm::AlignmentSets& sets,
                                 const rnm::GraphPair& pair, const rnm::MatchConfig& cfg) {
  const auto T = global_triples(pair);
  const std::set<int> n1 = oracle_neighbors(pair, e1), n2 = oracle_neighbors(pair, e2);
  const double denom = static_cast<double>(n1.size() + n2.size());
  if (denom == 0.0) return 0.0;

  double total = 0.0;
  if (cfg.relation_aware) {
    for (const auto& a : T) {
      if (a[0] != e1) continue;
      for (const auto& b : T) {
        if (b[0] != e2) continue;
        if (!sets.ent_contains(a[2], b[2])) continue;
        if (!sets.rel_contains(a[1], b[1])) continue;
        total += cfg.use_alignment_prob
                     ? 1.0 / (oracle_head_count(pair, a[1], a[2]) *
                              static_cast<double>(oracle_head_count(pair, b[1], b[2])))
                     : 1.0;
      }
    }
  } else {
    for (int n : n1) {
      int p = sets.ent_partner(n);
      if (p >= 0 && n2.count(p)) total += 1.0;
    }
  }
  return total / denom;
}

inline double oracle_relation_score(int r1, int r2, const rnm::AlignmentSets& sets,
                                    const rnm::GraphPair& pair) {
  auto pairs_of = [&](int r) {
    std::set<std::pair<int, int>> ps;
    for (const auto& t : global_triples(pair))
      if (t[1] == r) ps.insert({t[0], t[2]});
    return ps;
  };
  const auto s1 = pairs_of(r1), s2 = pairs_of(r2);
  const double denom = static_cast<double>(s1.size() + s2.size());
  if (denom == 0.0) return 0.0;
  int matched = 0;
  for (const auto& [h, t] : s1) {
    int h2 = sets.ent_partner(h), t2 = sets.ent_partner(t);
    if (h2 >= 0 && t2 >= 0 && s2.count({h2, t2})) ++matched;
  }
  return matched / denom;
}

// Set-update rule restated: per-source argmin proposals under the threshold,
// then one global conflict pass keeping the (distance, source) minimum.
inline rnm::AlignmentSets oracle_update_sets(const rnm::DistanceState& state,
                                             const rnm::IterConfig& cfg) {
  rnm::AlignmentSets out;
  std::set<int> seed_targets;
  for (const auto& [s, t] : state.seed_partner) {
    out.add_entity(s, t);
    seed_targets.insert(t);
  }

  auto resolve = [](std::map<int, std::vector<std::pair<double, int>>>& claims, auto add) {
    for (auto& [target, v] : claims) {
      auto best = *std::min_element(v.begin(), v.end());
      add(best.second, target);
    }
  };

  std::map<int, std::vector<std::pair<double, int>>> ent_claims;
  for (int i = 0; i < static_cast<int>(state.ent.size()); ++i) {
    if (state.seed_partner.count(i) || state.ent[i].empty()) continue;
    std::pair<double, int> best{state.ent[i][0].dist, state.ent[i][0].target};
    for (const auto& e : state.ent[i]) best = std::min(best, {e.dist, e.target});
    if (best.first < cfg.delta_e && !seed_targets.count(best.second))
      ent_claims[best.second].push_back({best.first, i});
  }
  resolve(ent_claims, [&](int a, int b) { out.add_entity(a, b); });

  std::map<int, std::vector<std::pair<double, int>>> rel_claims;
  for (int r = 0; r < static_cast<int>(state.rel.size()); ++r) {
    if (state.rel[r].empty()) continue;
    std::pair<double, int> best{state.rel[r][0].dist, state.rel[r][0].target};
    for (const auto& e : state.rel[r]) best = std::min(best, {e.dist, e.target});
    if (best.first < cfg.delta_r) rel_claims[best.second].push_back({best.first, r});
  }
  resolve(rel_claims, [&](int a, int b) { out.add_relation(a, b); });
  return out;
}

// Full-sort rank of `truth` within a candidate row; misses rank one past the
// row end.
inline int oracle_rank(const std::vector<rnm::CandEntry>& row, int truth) {
  std::vector<std::pair<double, int>> v;
  v.reserve(row.size());
  for (const auto& c : row) v.emplace_back(c.dist, c.target);
  std::sort(v.begin(), v.end());
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i].second == truth) return static_cast<int>(i) + 1;
  return static_cast<int>(v.size()) + 1;
}

// Scratch directory unique to one test; removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("rnm_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace testutil
