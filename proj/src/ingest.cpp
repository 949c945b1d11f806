#include "rnm/ingest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace fs = std::filesystem;

namespace rnm {

namespace {

std::runtime_error line_error(const std::string& file, int line, const std::string& what) {
  return std::runtime_error(file + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  if (!cols.empty() && !cols.back().empty() && cols.back().back() == '\r')
    cols.back().pop_back();
  return cols;
}

long long parse_ll(const std::string& file, int line, const std::string& s) {
  try {
    size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw line_error(file, line, "not an integer: '" + s + "'");
  }
}

struct IdTable {
  std::vector<long long> src_ids;
  std::vector<std::string> names;
  std::unordered_map<long long, int> to_local;
};

IdTable load_id_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  IdTable table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 2) throw line_error(path, lineno, "expected 2 tab-separated columns");
    long long src = parse_ll(path, lineno, cols[0]);
    if (table.to_local.count(src)) throw line_error(path, lineno, "duplicate id");
    table.to_local.emplace(src, static_cast<int>(table.src_ids.size()));
    table.src_ids.push_back(src);
    table.names.push_back(cols[1]);
  }
  return table;
}

std::vector<Triple> load_triple_file(const std::string& path, const IdTable& ents,
                                     const IdTable& rels) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<Triple> triples;
  std::unordered_set<std::uint64_t> seen;
  std::string line;
  int lineno = 0;
  int duplicates = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 3) throw line_error(path, lineno, "expected 3 tab-separated columns");
    long long h = parse_ll(path, lineno, cols[0]);
    long long r = parse_ll(path, lineno, cols[1]);
    long long t = parse_ll(path, lineno, cols[2]);
    auto he = ents.to_local.find(h);
    auto re = rels.to_local.find(r);
    auto te = ents.to_local.find(t);
    if (he == ents.to_local.end()) throw line_error(path, lineno, "unknown head entity id");
    if (re == rels.to_local.end()) throw line_error(path, lineno, "unknown relation id");
    if (te == ents.to_local.end()) throw line_error(path, lineno, "unknown tail entity id");
    std::uint64_t key =
        pair_key(he->second, re->second) * 1000003u + static_cast<std::uint32_t>(te->second);
    if (!seen.insert(key).second) {
      ++duplicates;
      continue;
    }
    triples.push_back({he->second, re->second, te->second});
  }
  if (duplicates > 0)
    std::cerr << "warning: " << path << ": dropped " << duplicates << " duplicate triples\n";
  return triples;
}

std::vector<std::pair<int, int>> load_ref_pairs(const std::string& path, const IdTable& left,
                                                const IdTable& right) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::pair<int, int>> pairs;
  std::unordered_set<int> seen_left, seen_right;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 2) throw line_error(path, lineno, "expected 2 tab-separated columns");
    long long a = parse_ll(path, lineno, cols[0]);
    long long b = parse_ll(path, lineno, cols[1]);
    auto ae = left.to_local.find(a);
    auto be = right.to_local.find(b);
    if (ae == left.to_local.end())
      throw line_error(path, lineno, "dangling left id " + std::to_string(a));
    if (be == right.to_local.end())
      throw line_error(path, lineno, "dangling right id " + std::to_string(b));
    if (!seen_left.insert(ae->second).second)
      throw line_error(path, lineno, "left id appears twice (pairs must be one-to-one)");
    if (!seen_right.insert(be->second).second)
      throw line_error(path, lineno, "right id appears twice (pairs must be one-to-one)");
    pairs.emplace_back(ae->second, be->second);
  }
  return pairs;
}

KnowledgeGraph assemble_kg(IdTable ents, IdTable rels, std::vector<Triple> triples) {
  KnowledgeGraph kg;
  kg.num_entities = static_cast<int>(ents.src_ids.size());
  kg.num_relations = static_cast<int>(rels.src_ids.size());
  kg.entity_src_ids = std::move(ents.src_ids);
  kg.entity_names = std::move(ents.names);
  kg.relation_src_ids = std::move(rels.src_ids);
  kg.relation_names = std::move(rels.names);
  kg.triples = std::move(triples);
  kg.validate();
  return kg;
}

}  // namespace

Matrix load_features(const std::string& path, int dim, const KnowledgeGraph& kg,
                     const std::string& fill, std::uint64_t fill_seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::unordered_map<long long, int> to_local;
  for (int i = 0; i < kg.num_entities; ++i) to_local.emplace(kg.entity_src_ids[i], i);

  Matrix rows = Matrix::Zero(kg.num_entities, dim);
  std::vector<bool> have(kg.num_entities, false);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    long long src;
    if (!(ss >> src)) throw line_error(path, lineno, "expected an entity id");
    auto it = to_local.find(src);
    if (it == to_local.end())
      throw line_error(path, lineno, "unknown entity id " + std::to_string(src));
    for (int d = 0; d < dim; ++d) {
      double v;
      if (!(ss >> v))
        throw line_error(path, lineno, "expected " + std::to_string(dim) + " floats");
    rows(it->second, d) = v;
    }
    double extra;
    if (ss >> extra)
      throw line_error(path, lineno, "more than " + std::to_string(dim) + " floats");
    have[it->second] = true;
  }

  int missing = 0;
  std::mt19937_64 rng(fill_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < kg.num_entities; ++i) {
    if (have[i]) continue;
    ++missing;
    if (fill == "normal")
      for (int d = 0; d < dim; ++d) rows(i, d) = normal(rng);
    // zeros fill is the Matrix::Zero default
  }
  if (missing > 0)
    std::cerr << "warning: " << path << ": " << missing << " entities missing, filled with "
              << fill << "\n";
  return rows;
}

Dataset load_dbp15k(const std::string& dir) {
  auto p = [&](const std::string& name) { return (fs::path(dir) / name).string(); };

  IdTable ents1 = load_id_file(p("ent_ids_1"));
  IdTable ents2 = load_id_file(p("ent_ids_2"));
  IdTable rels1 = load_id_file(p("rel_ids_1"));
  IdTable rels2 = load_id_file(p("rel_ids_2"));

  Dataset ds;
  ds.ref_entities = load_ref_pairs(p("ref_ent_ids"), ents1, ents2);
  if (fs::exists(p("ref_rel_ids"))) ds.ref_relations = load_ref_pairs(p("ref_rel_ids"), rels1, rels2);

  auto triples1 = load_triple_file(p("triples_1"), ents1, rels1);
  auto triples2 = load_triple_file(p("triples_2"), ents2, rels2);
  ds.pair.g1 = assemble_kg(std::move(ents1), std::move(rels1), std::move(triples1));
  ds.pair.g2 = assemble_kg(std::move(ents2), std::move(rels2), std::move(triples2));

  const std::string f1 = p("ent_features_1"), f2 = p("ent_features_2");
  if (fs::exists(f1) != fs::exists(f2))
    throw std::runtime_error(dir + ": feature files must be present for both KGs or neither");
  if (fs::exists(f1)) {
    // Dimension comes from the first record of the first file.
    std::ifstream probe(f1);
    std::string first;
    if (!std::getline(probe, first) || first.empty())
      throw std::runtime_error(f1 + ": empty feature file");
    std::istringstream ss(first);
    std::string tok;
    int dim = -1;
    while (ss >> tok) ++dim;
    if (dim < 1) throw std::runtime_error(f1 + ": first record has no feature values");
    Matrix r1 = load_features(f1, dim, ds.pair.g1, "zeros", 0);
    Matrix r2 = load_features(f2, dim, ds.pair.g2, "zeros", 1);
    ds.features.rows.resize(r1.rows() + r2.rows(), dim);
    ds.features.rows.topRows(r1.rows()) = r1;
    ds.features.rows.bottomRows(r2.rows()) = r2;
    ds.features.present = true;
  }
  return ds;
}

void write_dataset(const Dataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    return out;
  };
  auto write_ids = [&](const std::string& name, const std::vector<long long>& ids,
                       const std::vector<std::string>& names) {
    auto out = open(name);
    for (size_t i = 0; i < ids.size(); ++i) out << ids[i] << '\t' << names[i] << '\n';
  };
  auto write_triples = [&](const std::string& name, const KnowledgeGraph& kg) {
    auto out = open(name);
    for (const Triple& t : kg.triples)
      out << kg.entity_src_ids[t.head] << '\t' << kg.relation_src_ids[t.rel] << '\t'
          << kg.entity_src_ids[t.tail] << '\n';
  };

  write_ids("ent_ids_1", ds.pair.g1.entity_src_ids, ds.pair.g1.entity_names);
  write_ids("ent_ids_2", ds.pair.g2.entity_src_ids, ds.pair.g2.entity_names);
  write_ids("rel_ids_1", ds.pair.g1.relation_src_ids, ds.pair.g1.relation_names);
  write_ids("rel_ids_2", ds.pair.g2.relation_src_ids, ds.pair.g2.relation_names);
  write_triples("triples_1", ds.pair.g1);
  write_triples("triples_2", ds.pair.g2);

  {
    auto out = open("ref_ent_ids");
    for (const auto& [a, b] : ds.ref_entities)
      out << ds.pair.g1.entity_src_ids[a] << '\t' << ds.pair.g2.entity_src_ids[b] << '\n';
  }
  if (!ds.ref_relations.empty()) {
    auto out = open("ref_rel_ids");
    for (const auto& [a, b] : ds.ref_relations)
      out << ds.pair.g1.relation_src_ids[a] << '\t' << ds.pair.g2.relation_src_ids[b] << '\n';
  }
  if (ds.features.present) {
    const int off = ds.pair.entity_offset();
    auto dump = [&](const std::string& name, const KnowledgeGraph& kg, int row0) {
      auto out = open(name);
      out.precision(17);
      for (int i = 0; i < kg.num_entities; ++i) {
        out << kg.entity_src_ids[i];
        for (int d = 0; d < ds.features.dim(); ++d) out << ' ' << ds.features.rows(row0 + i, d);
        out << '\n';
      }
    };
    dump("ent_features_1", ds.pair.g1, 0);
    dump("ent_features_2", ds.pair.g2, off);
  }
}

SeedAlignments split_seeds(const std::vector<std::pair<int, int>>& ref_pairs, double ratio,
                           std::uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0) throw std::runtime_error("seed ratio must be in (0,1)");
  std::vector<size_t> order(ref_pairs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  size_t n_train = static_cast<size_t>(ref_pairs.size() * ratio);
  if (n_train == 0) throw std::runtime_error("seed ratio yields zero training pairs");
  if (n_train >= ref_pairs.size()) throw std::runtime_error("seed ratio leaves no test pairs");
  SeedAlignments out;
  out.ratio = ratio;
  out.train.reserve(n_train);
  out.test.reserve(ref_pairs.size() - n_train);
  for (size_t i = 0; i < order.size(); ++i)
    (i < n_train ? out.train : out.test).push_back(ref_pairs[order[i]]);
  return out;
}

Dataset generate_synthetic_pair(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.rng_seed);
  std::uniform_int_distribution<int> pick_entity(0, spec.entities - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Base graph. Each relation gets a head-count cardinality: 1 for the
  // 1-to-1 share, otherwise a draw from [n_min, n_max]; every used tail of a
  // relation is pointed at by exactly that many distinct heads.
  const long long target_triples =
      std::max<long long>(1, static_cast<long long>(spec.entities * spec.mean_degree));
  std::vector<int> cardinality(spec.relations);
  std::uniform_int_distribution<int> pick_n(spec.n_min, spec.n_max);
  const int n_one_to_one = static_cast<int>(spec.relations * spec.one_to_one_fraction + 0.5);
  for (int r = 0; r < spec.relations; ++r)
    cardinality[r] = r < n_one_to_one ? 1 : pick_n(rng);

  std::vector<Triple> base;
  base.reserve(target_triples);
  // Each tail is used at most once per relation, so triples are unique by
  // construction: per tail, heads form one distinct set.
  std::vector<std::unordered_set<int>> used_heads(spec.relations);
  std::vector<std::unordered_set<int>> used_tails(spec.relations);
  long long per_relation = (target_triples + spec.relations - 1) / spec.relations;
  for (int r = 0; r < spec.relations; ++r) {
    long long made = 0;
    int guard = 0;
    while (made < per_relation && guard < per_relation * 50) {
      ++guard;
      int tail = pick_entity(rng);
      if (used_tails[r].count(tail)) continue;
      // Collect `cardinality[r]` distinct heads for this tail.
      std::unordered_set<int> heads;
      int tries = 0;
      while (static_cast<int>(heads.size()) < cardinality[r] && tries < 100) {
        ++tries;
        int h = pick_entity(rng);
        if (h == tail) continue;
        if (cardinality[r] == 1 && used_heads[r].count(h)) continue;  // keep 1-to-1 strict
        heads.insert(h);
      }
      if (static_cast<int>(heads.size()) < cardinality[r]) continue;
      used_tails[r].insert(tail);
      for (int h : heads) {
        used_heads[r].insert(h);
        base.push_back({h, r, tail});
        ++made;
      }
    }
  }

  // Two views: independent triple dropout, freshly numbered ids per view.
  auto make_view = [&](int view) {
    std::vector<Triple> kept;
    kept.reserve(base.size());
    for (const Triple& t : base)
      if (unit(rng) >= spec.dropout) kept.push_back(t);

    std::vector<int> ent_perm(spec.entities), rel_perm(spec.relations);
    std::iota(ent_perm.begin(), ent_perm.end(), 0);
    std::iota(rel_perm.begin(), rel_perm.end(), 0);
    if (view == 2) {
      std::shuffle(ent_perm.begin(), ent_perm.end(), rng);
      std::shuffle(rel_perm.begin(), rel_perm.end(), rng);
    }
    KnowledgeGraph kg;
    kg.num_entities = spec.entities;
    kg.num_relations = spec.relations;
    kg.entity_src_ids.resize(spec.entities);
    kg.entity_names.resize(spec.entities);
    kg.relation_src_ids.resize(spec.relations);
    kg.relation_names.resize(spec.relations);
    for (int e = 0; e < spec.entities; ++e) {
      int local = ent_perm[e];  // base entity e lives at view-local id ent_perm[e]
      kg.entity_src_ids[local] = local;
      kg.entity_names[local] = "v" + std::to_string(view) + "_ent" + std::to_string(e);
    }
    for (int r = 0; r < spec.relations; ++r) {
      int local = rel_perm[r];
      kg.relation_src_ids[local] = local;
      kg.relation_names[local] = "v" + std::to_string(view) + "_rel" + std::to_string(r);
    }
    kg.triples.reserve(kept.size());
    for (const Triple& t : kept)
      kg.triples.push_back({ent_perm[t.head], rel_perm[t.rel], ent_perm[t.tail]});
    return std::make_pair(std::move(kg), std::make_pair(ent_perm, rel_perm));
  };

  auto [kg1, perms1] = make_view(1);
  auto [kg2, perms2] = make_view(2);

  Dataset ds;
  ds.pair.g1 = std::move(kg1);
  ds.pair.g2 = std::move(kg2);
  ds.ref_entities.reserve(spec.entities);
  for (int e = 0; e < spec.entities; ++e)
    ds.ref_entities.emplace_back(perms1.first[e], perms2.first[e]);
  ds.ref_relations.reserve(spec.relations);
  for (int r = 0; r < spec.relations; ++r)
    ds.ref_relations.emplace_back(perms1.second[r], perms2.second[r]);

  // Shared base vector per entity plus independent per-view noise.
  Matrix basef(spec.entities, spec.feature_dim);
  for (int e = 0; e < spec.entities; ++e)
    for (int d = 0; d < spec.feature_dim; ++d) basef(e, d) = normal(rng);
  ds.features.rows = Matrix::Zero(2 * spec.entities, spec.feature_dim);
  for (int view = 0; view < 2; ++view) {
    const auto& ent_perm = view == 0 ? perms1.first : perms2.first;
    const int row0 = view * spec.entities;
    for (int e = 0; e < spec.entities; ++e)
      for (int d = 0; d < spec.feature_dim; ++d)
        ds.features.rows(row0 + ent_perm[e], d) = basef(e, d) + spec.sigma * normal(rng);
  }
  ds.features.present = true;

  int isolated = 0;
  {
    std::vector<char> touched(2 * spec.entities, 0);
    for (const Triple& t : ds.pair.g1.triples) touched[t.head] = touched[t.tail] = 1;
    for (const Triple& t : ds.pair.g2.triples)
      touched[spec.entities + t.head] = touched[spec.entities + t.tail] = 1;
    isolated = static_cast<int>(std::count(touched.begin(), touched.end(), 0));
  }
  if (isolated > 0)
    std::cerr << "warning: synthetic pair has " << isolated << " entities with no triples\n";

  ds.pair.g1.validate();
  ds.pair.g2.validate();
  return ds;
}

}  // namespace rnm
