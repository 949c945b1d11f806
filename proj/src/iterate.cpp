#include "rnm/iterate.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

namespace rnm {

namespace {

void sort_row(std::vector<CandEntry>& row) {
  std::sort(row.begin(), row.end(), [](const CandEntry& a, const CandEntry& b) {
    return a.dist < b.dist || (a.dist == b.dist && a.target < b.target);
  });
}

void for_each_row(int rows, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, threads);
  if (threads == 1 || rows < 2 * threads) {
    for (int i = 0; i < rows; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  int chunk = (rows + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    int begin = t * chunk, end = std::min(rows, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([&, begin, end] {
      for (int i = begin; i < end; ++i) body(i);
    });
  }
  for (auto& w : workers) w.join();
}

void write_i64(std::ostream& out, std::int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_i32(std::ostream& out, std::int32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::int64_t read_i64(std::istream& in) {
  std::int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::int32_t read_i32(std::istream& in) {
  std::int32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void write_src_ids(std::ostream& out, const std::vector<long long>& ids, int fallback_count) {
  if (ids.empty()) {
    write_i64(out, fallback_count);
    for (int i = 0; i < fallback_count; ++i) write_i64(out, i);
    return;
  }
  write_i64(out, static_cast<std::int64_t>(ids.size()));
  for (long long v : ids) write_i64(out, v);
}

std::vector<long long> read_src_ids(std::istream& in) {
  std::vector<long long> ids(static_cast<std::size_t>(read_i64(in)));
  for (auto& v : ids) v = read_i64(in);
  return ids;
}

void write_rows(std::ostream& out, const std::vector<std::vector<CandEntry>>& rows) {
  write_i64(out, static_cast<std::int64_t>(rows.size()));
  for (const auto& row : rows) {
    write_i64(out, static_cast<std::int64_t>(row.size()));
    for (const CandEntry& e : row) {
      write_i32(out, e.target);
      write_f64(out, e.base);
      write_f64(out, e.dist);
    }
  }
}

std::vector<std::vector<CandEntry>> read_rows(std::istream& in) {
  std::vector<std::vector<CandEntry>> rows(static_cast<std::size_t>(read_i64(in)));
  for (auto& row : rows) {
    row.resize(static_cast<std::size_t>(read_i64(in)));
    for (CandEntry& e : row) {
      e.target = read_i32(in);
      e.base = read_f64(in);
      e.dist = read_f64(in);
    }
  }
  return rows;
}

void write_pair_map(std::ostream& out, const std::unordered_map<int, int>& map) {
  std::vector<std::pair<int, int>> sorted(map.begin(), map.end());
  std::sort(sorted.begin(), sorted.end());
  write_i64(out, static_cast<std::int64_t>(sorted.size()));
  for (auto [a, b] : sorted) {
    write_i32(out, a);
    write_i32(out, b);
  }
}

std::unordered_map<int, int> read_pair_map(std::istream& in) {
  std::unordered_map<int, int> map;
  std::int64_t count = read_i64(in);
  map.reserve(static_cast<std::size_t>(count) * 2);
  for (std::int64_t i = 0; i < count; ++i) {
    int a = read_i32(in);
    int b = read_i32(in);
    map[a] = b;
  }
  return map;
}

}  // namespace

DistanceState init_distances(const EmbeddingState& emb,
                             const std::vector<std::pair<int, int>>& seeds, const GraphPair& pair,
                             const MatchConfig& cfg, int threads) {
  cfg.validate();
  DistanceState state;
  state.seed_partner.reserve(seeds.size() * 2);
  for (auto [p, q] : seeds) state.seed_partner[p] = q;

  auto ent_cands = candidate_pairs(emb.x, 0, pair.entity_offset(), pair.entity_offset(),
                                   pair.total_entities(), cfg.ent_candidates, threads);
  state.ent.resize(ent_cands.size());
  for (std::size_t i = 0; i < ent_cands.size(); ++i) {
    auto seed_it = state.seed_partner.find(static_cast<int>(i));
    if (seed_it != state.seed_partner.end()) {
      state.ent[i] = {{seed_it->second, 0.0, 0.0}};
      continue;
    }
    state.ent[i].reserve(ent_cands[i].size());
    for (auto [target, dist] : ent_cands[i]) state.ent[i].push_back({target, dist, dist});
  }

  auto rel_cands = candidate_pairs(emb.relations, 0, pair.relation_offset(),
                                   pair.relation_offset(), pair.total_relations(),
                                   cfg.rel_candidates, threads);
  state.rel.resize(rel_cands.size());
  for (std::size_t i = 0; i < rel_cands.size(); ++i) {
    state.rel[i].reserve(rel_cands[i].size());
    for (auto [target, dist] : rel_cands[i]) state.rel[i].push_back({target, dist, dist});
  }
  return state;
}

AlignmentSets update_alignment_sets(const DistanceState& state, const IterConfig& cfg) {
  cfg.validate();
  AlignmentSets sets;
  for (auto [a, b] : state.seed_partner) sets.add_entity(a, b);

  struct Claim {
    double dist;
    int source;
  };
  auto collect = [](const std::vector<std::vector<CandEntry>>& rows,
                    const std::function<bool(int)>& skip_source,
                    const std::function<bool(int)>& target_taken, double threshold) {
    std::unordered_map<int, Claim> best;
    for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
      if (skip_source(i) || rows[i].empty()) continue;
      const CandEntry& front = rows[i].front();
      if (!(front.dist < threshold) || target_taken(front.target)) continue;
      auto it = best.find(front.target);
      if (it == best.end() || front.dist < it->second.dist ||
          (front.dist == it->second.dist && i < it->second.source))
        best[front.target] = {front.dist, i};
    }
    return best;
  };

  auto ent_claims = collect(
      state.ent, [&](int i) { return state.is_seed(i); },
      [&](int t) { return sets.ent_rev.count(t) > 0; }, cfg.delta_e);
  for (const auto& [target, claim] : ent_claims) sets.add_entity(claim.source, target);

  auto rel_claims = collect(
      state.rel, [](int) { return false; }, [](int) { return false; }, cfg.delta_r);
  for (const auto& [target, claim] : rel_claims) sets.add_relation(claim.source, target);
  return sets;
}

void update_entity_distances(DistanceState& state, const AlignmentSets& sets,
                             const Indexes& indexes, const MatchConfig& cfg, int threads) {
  for_each_row(static_cast<int>(state.ent.size()), threads, [&](int i) {
    if (state.is_seed(i)) return;
    auto& row = state.ent[i];
    for (CandEntry& e : row)
      e.dist = update_entity_distance(
          e.base, neighborhood_match_score(i, e.target, sets, indexes, cfg), cfg.lambda_e);
    sort_row(row);
  });
}

void update_relation_distances(DistanceState& state, const AlignmentSets& sets,
                               const Indexes& indexes, const MatchConfig& cfg, int threads) {
  for_each_row(static_cast<int>(state.rel.size()), threads, [&](int i) {
    auto& row = state.rel[i];
    for (CandEntry& e : row)
      e.dist = update_relation_distance(e.base, relation_match_score(i, e.target, sets, indexes),
                                        cfg.lambda_r);
    sort_row(row);
  });
}

IterateResult run_iterations(DistanceState state, const Indexes& indexes, const MatchConfig& mcfg,
                             const IterConfig& icfg, int threads, const IterationHook& hook) {
  icfg.validate();
  IterateResult res;
  res.state = std::move(state);
  bool have_prev = false;
  AlignmentSets prev;
  for (int t = 1; t <= icfg.max_iters; ++t) {
    AlignmentSets sets = update_alignment_sets(res.state, icfg);
    IterationMetrics m;
    m.iteration = t;
    m.ent_aligned = static_cast<int>(sets.ent_fwd.size());
    m.rel_aligned = static_cast<int>(sets.rel_fwd.size());
    if (have_prev && sets == prev) {
      // Unchanged sets reproduce the previous distance update exactly.
      m.converged = true;
      res.metrics.push_back(m);
      res.sets = std::move(sets);
      return res;
    }
    update_entity_distances(res.state, sets, indexes, mcfg, threads);
    update_relation_distances(res.state, sets, indexes, mcfg, threads);
    if (hook) hook(res.state, sets, m);
    res.metrics.push_back(m);
    prev = sets;
    have_prev = true;
    res.sets = std::move(sets);
  }
  return res;
}

void save_state(const DistanceState& state, const AlignmentSets& sets, const GraphPair& pair,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write state dump: " + path);
  out.write("RNMS", 4);
  write_i64(out, 1);  // version
  write_i64(out, pair.entity_offset());
  write_i64(out, pair.relation_offset());
  write_i64(out, pair.g1.forward_relations);
  write_i64(out, pair.g2.forward_relations);
  write_src_ids(out, pair.g1.entity_src_ids, pair.g1.num_entities);
  write_src_ids(out, pair.g2.entity_src_ids, pair.g2.num_entities);
  write_src_ids(out, pair.g1.relation_src_ids, pair.g1.num_relations);
  write_src_ids(out, pair.g2.relation_src_ids, pair.g2.num_relations);
  write_pair_map(out, state.seed_partner);
  write_rows(out, state.ent);
  write_rows(out, state.rel);
  write_pair_map(out, sets.ent_fwd);
  write_pair_map(out, sets.rel_fwd);
  if (!out) throw std::runtime_error("state dump write failed: " + path);
}

LoadedState load_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read state dump: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "RNMS")
    throw std::runtime_error("not a state dump: " + path);
  std::int64_t version = read_i64(in);
  if (version != 1)
    throw std::runtime_error("unsupported state dump version " + std::to_string(version));

  LoadedState ls;
  ls.entity_offset = static_cast<int>(read_i64(in));
  ls.relation_offset = static_cast<int>(read_i64(in));
  ls.forward_relations_1 = static_cast<int>(read_i64(in));
  ls.forward_relations_2 = static_cast<int>(read_i64(in));
  ls.ent_src_1 = read_src_ids(in);
  ls.ent_src_2 = read_src_ids(in);
  ls.rel_src_1 = read_src_ids(in);
  ls.rel_src_2 = read_src_ids(in);
  ls.state.seed_partner = read_pair_map(in);
  ls.state.ent = read_rows(in);
  ls.state.rel = read_rows(in);
  auto ent_fwd = read_pair_map(in);
  for (auto [a, b] : ent_fwd) ls.sets.add_entity(a, b);
  auto rel_fwd = read_pair_map(in);
  for (auto [a, b] : rel_fwd) ls.sets.add_relation(a, b);
  if (!in) throw std::runtime_error("state dump read failed: " + path);
  return ls;
}

void write_alignment_files(const DistanceState& state, const AlignmentSets& sets,
                           const GraphPair& pair, const std::string& entities_path,
                           const std::string& relations_path) {
  auto src_of = [](const std::vector<long long>& ids, int local) {
    return local < static_cast<int>(ids.size()) ? ids[local] : local;
  };
  auto dist_of = [](const std::vector<CandEntry>& row, int target) {
    for (const CandEntry& e : row)
      if (e.target == target) return e.dist;
    return std::numeric_limits<double>::quiet_NaN();
  };

  std::ofstream ents(entities_path);
  if (!ents) throw std::runtime_error("cannot write " + entities_path);
  std::vector<std::pair<int, int>> ent_pairs(sets.ent_fwd.begin(), sets.ent_fwd.end());
  std::sort(ent_pairs.begin(), ent_pairs.end());
  ents.precision(17);
  for (auto [a, b] : ent_pairs)
    ents << src_of(pair.g1.entity_src_ids, a) << '\t'
         << src_of(pair.g2.entity_src_ids, b - pair.entity_offset()) << '\t'
         << dist_of(state.ent[a], b) << '\n';

  // Reverse-relation pairs mirror their forward counterparts and share source
  // ids, so only forward-forward pairs are emitted.
  std::ofstream rels(relations_path);
  if (!rels) throw std::runtime_error("cannot write " + relations_path);
  std::vector<std::pair<int, int>> rel_pairs;
  for (auto [a, b] : sets.rel_fwd)
    if (!pair.g1.is_reverse(a) && !pair.g2.is_reverse(b - pair.relation_offset()))
      rel_pairs.emplace_back(a, b);
  std::sort(rel_pairs.begin(), rel_pairs.end());
  rels.precision(17);
  for (auto [a, b] : rel_pairs)
    rels << src_of(pair.g1.relation_src_ids, a) << '\t'
         << src_of(pair.g2.relation_src_ids, b - pair.relation_offset()) << '\t'
         << dist_of(state.rel[a], b) << '\n';
}

}  // namespace rnm
