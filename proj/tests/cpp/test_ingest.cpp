#include <doctest.h>

#include <algorithm>
#include <set>
#include <stdexcept>
#include <tuple>

#include "helpers.hpp"
#include "rnm/ingest.hpp"

using namespace rnm;
using namespace testutil;

namespace {

// A minimal loadable directory: 4 entities / 2 relations per side.
void write_tiny_dataset(const TempDir& dir) {
  write_file(dir.file("ent_ids_1"), "0\ta\n1\tb\n2\tc\n3\td\n");
  write_file(dir.file("ent_ids_2"), "10\tA\n11\tB\n12\tC\n13\tD\n");
  write_file(dir.file("rel_ids_1"), "0\tr0\n7\tr7\n");
  write_file(dir.file("rel_ids_2"), "20\ts0\n21\ts1\n");
  write_file(dir.file("triples_1"), "0\t0\t1\n3\t7\t2\n2\t0\t3\n");
  write_file(dir.file("triples_2"), "10\t20\t11\n12\t21\t13\n");
  write_file(dir.file("ref_ent_ids"), "0\t10\n1\t11\n2\t12\n3\t13\n");
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("triple line maps source ids through the id tables") {
  TempDir dir("ingest_parse");
  write_file(dir.file("ent_ids_1"), "3\tthree\n9\tnine\n");
  write_file(dir.file("rel_ids_1"), "7\tseven\n");
  write_file(dir.file("ent_ids_2"), "0\tz\n1\to\n");
  write_file(dir.file("rel_ids_2"), "0\tr\n");
  write_file(dir.file("triples_1"), "3\t7\t9\n");
  write_file(dir.file("triples_2"), "0\t0\t1\n");
  write_file(dir.file("ref_ent_ids"), "3\t0\n9\t1\n");

  Dataset ds = load_dbp15k(dir.path.string());
  REQUIRE(ds.pair.g1.triples.size() == 1);
  // Source line "3\t7\t9" lands on dense ids via table order.
  CHECK(ds.pair.g1.triples[0] == Triple{0, 0, 1});
  CHECK(ds.pair.g1.entity_src_ids == std::vector<long long>{3, 9});
  CHECK(ds.pair.g1.relation_src_ids == std::vector<long long>{7});
  CHECK(ds.pair.g1.entity_names[0] == "three");
  REQUIRE(ds.ref_entities.size() == 2);
  CHECK(ds.ref_entities[0] == std::pair<int, int>{0, 0});
  CHECK(ds.ref_entities[1] == std::pair<int, int>{1, 1});
  CHECK_FALSE(ds.features.present);
}

TEST_CASE("malformed lines name the file and line") {
  TempDir dir("ingest_bad");
  write_tiny_dataset(dir);

  SUBCASE("short triple line") {
    write_file(dir.file("triples_1"), "0\t0\n");
    CHECK_THROWS_WITH_AS(load_dbp15k(dir.path.string()),
                         doctest::Contains("triples_1:1"), std::runtime_error);
  }
  SUBCASE("non-integer id") {
    write_file(dir.file("triples_1"), "0\t0\t1\nzero\t0\t1\n");
    CHECK_THROWS_WITH_AS(load_dbp15k(dir.path.string()),
                         doctest::Contains("triples_1:2"), std::runtime_error);
  }
  SUBCASE("unknown entity in a triple") {
    write_file(dir.file("triples_1"), "0\t0\t99\n");
    CHECK_THROWS_WITH_AS(load_dbp15k(dir.path.string()),
                         doctest::Contains("unknown tail entity"), std::runtime_error);
  }
  SUBCASE("duplicate id table entry") {
    write_file(dir.file("ent_ids_1"), "0\ta\n0\tb\n");
    CHECK_THROWS_WITH_AS(load_dbp15k(dir.path.string()),
                         doctest::Contains("duplicate id"), std::runtime_error);
  }
  SUBCASE("missing file") {
    std::filesystem::remove(dir.file("triples_2"));
    CHECK_THROWS_WITH_AS(load_dbp15k(dir.path.string()), doctest::Contains("cannot open"),
                         std::runtime_error);
  }
}

TEST_CASE("reference pairs must be one-to-one") {
  TempDir dir("ingest_ref");
  write_tiny_dataset(dir);
  write_file(dir.file("ref_ent_ids"), "0\t10\n0\t11\n");
  CHECK_THROWS_WITH_AS(load_dbp15k(dir.path.string()),
                       doctest::Contains("ref_ent_ids:2"), std::runtime_error);

  write_file(dir.file("ref_ent_ids"), "0\t10\n1\t10\n");
  CHECK_THROWS_WITH_AS(load_dbp15k(dir.path.string()),
                       doctest::Contains("appears twice"), std::runtime_error);

  write_file(dir.file("ref_ent_ids"), "0\t10\n99\t11\n");
  CHECK_THROWS_WITH_AS(load_dbp15k(dir.path.string()),
                       doctest::Contains("dangling left id 99"), std::runtime_error);
}

TEST_CASE("duplicate triples are dropped once") {
  TempDir dir("ingest_dup");
  write_tiny_dataset(dir);
  write_file(dir.file("triples_1"), "0\t0\t1\n0\t0\t1\n2\t0\t3\n");
  Dataset ds = load_dbp15k(dir.path.string());
  CHECK(ds.pair.g1.triples.size() == 2);
}

TEST_CASE("feature files load, fill and reject bad rows") {
  TempDir dir("ingest_feat");
  write_tiny_dataset(dir);

  SUBCASE("rows keyed by source id, missing rows zero-filled") {
    write_file(dir.file("ent_features_1"), "0 1 2\n3 5 6\n");
    write_file(dir.file("ent_features_2"), "10 0.5 0.5\n11 1 1\n12 2 2\n13 3 3\n");
    Dataset ds = load_dbp15k(dir.path.string());
    REQUIRE(ds.features.present);
    CHECK(ds.features.dim() == 2);
    CHECK(ds.features.rows(0, 0) == 1.0);
    CHECK(ds.features.rows(0, 1) == 2.0);
    CHECK(ds.features.rows(3, 1) == 6.0);
    CHECK(ds.features.rows(1, 0) == 0.0);  // entity b missing from the file
    CHECK(ds.features.rows(4, 0) == 0.5);  // first g2 row
  }
  SUBCASE("dimension mismatch is an error") {
    write_file(dir.file("ent_features_1"), "0 1 2\n1 1 2 3\n");
    write_file(dir.file("ent_features_2"), "10 1 2\n");
    CHECK_THROWS_WITH_AS(load_dbp15k(dir.path.string()), doctest::Contains("ent_features_1:2"),
                         std::runtime_error);
  }
  SUBCASE("short row is an error") {
    write_file(dir.file("ent_features_1"), "0 1 2\n1 1\n");
    write_file(dir.file("ent_features_2"), "10 1 2\n");
    CHECK_THROWS_WITH_AS(load_dbp15k(dir.path.string()), doctest::Contains("expected 2 floats"),
                         std::runtime_error);
  }
  SUBCASE("unknown entity id is an error") {
    write_file(dir.file("ent_features_1"), "42 1 2\n");
    write_file(dir.file("ent_features_2"), "10 1 2\n");
    CHECK_THROWS_WITH_AS(load_dbp15k(dir.path.string()),
                         doctest::Contains("unknown entity id 42"), std::runtime_error);
  }
  SUBCASE("one-sided feature files are an error") {
    write_file(dir.file("ent_features_1"), "0 1 2\n");
    CHECK_THROWS_WITH_AS(load_dbp15k(dir.path.string()),
                         doctest::Contains("both KGs or neither"), std::runtime_error);
  }
}

TEST_CASE("normal fill is deterministic per seed") {
  TempDir dir("ingest_fill");
  write_tiny_dataset(dir);
  Dataset ds = load_dbp15k(dir.path.string());
  Matrix a = load_features("/dev/null", 3, ds.pair.g1, "normal", 5);
  Matrix b = load_features("/dev/null", 3, ds.pair.g1, "normal", 5);
  Matrix c = load_features("/dev/null", 3, ds.pair.g1, "normal", 6);
  CHECK(same_matrix(a, b));
  CHECK_FALSE(same_matrix(a, c));
  CHECK(a.rows() == 4);
  Matrix z = load_features("/dev/null", 3, ds.pair.g1, "zeros", 5);
  CHECK(z.cwiseAbs().sum() == 0.0);
}

TEST_CASE("write_dataset round-trips through load_dbp15k") {
  SynthSpec spec;
  spec.entities = 30;
  spec.relations = 4;
  spec.dropout = 0.1;
  spec.feature_dim = 5;
  spec.rng_seed = 11;
  Dataset ds = generate_synthetic_pair(spec);

  TempDir dir("ingest_round");
  write_dataset(ds, dir.path.string());
  Dataset back = load_dbp15k(dir.path.string());

  CHECK(back.pair.g1.triples == ds.pair.g1.triples);
  CHECK(back.pair.g2.triples == ds.pair.g2.triples);
  CHECK(back.pair.g1.entity_src_ids == ds.pair.g1.entity_src_ids);
  CHECK(back.pair.g2.relation_src_ids == ds.pair.g2.relation_src_ids);
  CHECK(back.ref_entities == ds.ref_entities);
  CHECK(back.ref_relations == ds.ref_relations);
  REQUIRE(back.features.present);
  CHECK(same_matrix(back.features.rows, ds.features.rows));  // 17 digits survive exactly
}

TEST_CASE("synthetic generation is deterministic per seed") {
  SynthSpec spec;
  spec.entities = 40;
  spec.relations = 5;
  spec.rng_seed = 3;
  Dataset a = generate_synthetic_pair(spec);
  Dataset b = generate_synthetic_pair(spec);
  CHECK(a.pair.g1.triples == b.pair.g1.triples);
  CHECK(a.pair.g2.triples == b.pair.g2.triples);
  CHECK(a.ref_entities == b.ref_entities);
  CHECK(same_matrix(a.features.rows, b.features.rows));

  spec.rng_seed = 4;
  Dataset c = generate_synthetic_pair(spec);
  CHECK(a.pair.g2.triples != c.pair.g2.triples);
}

TEST_CASE("noiseless views are isomorphic under the ground truth") {
  SynthSpec spec;
  spec.entities = 25;
  spec.relations = 4;
  spec.dropout = 0.0;
  spec.sigma = 0.0;
  spec.rng_seed = 17;
  Dataset ds = generate_synthetic_pair(spec);

  std::vector<int> ent_map(spec.entities, -1), rel_map(spec.relations, -1);
  for (auto [a, b] : ds.ref_entities) ent_map[a] = b;
  for (auto [a, b] : ds.ref_relations) rel_map[a] = b;

  std::set<std::tuple<int, int, int>> t2;
  for (const Triple& t : ds.pair.g2.triples) t2.insert({t.head, t.rel, t.tail});
  std::set<std::tuple<int, int, int>> mapped;
  for (const Triple& t : ds.pair.g1.triples)
    mapped.insert({ent_map[t.head], rel_map[t.rel], ent_map[t.tail]});
  CHECK(mapped == t2);

  // Features agree exactly on true pairs when sigma = 0.
  for (auto [a, b] : ds.ref_entities)
    CHECK((ds.features.rows.row(a) - ds.features.rows.row(spec.entities + b))
              .cwiseAbs()
              .sum() == 0.0);
}

TEST_CASE("ground truth is a full bijection") {
  SynthSpec spec;
  spec.entities = 35;
  spec.relations = 6;
  spec.rng_seed = 9;
  Dataset ds = generate_synthetic_pair(spec);
  CHECK(ds.ref_entities.size() == 35);
  CHECK(ds.ref_relations.size() == 6);
  std::set<int> left, right;
  for (auto [a, b] : ds.ref_entities) {
    left.insert(a);
    right.insert(b);
  }
  CHECK(left.size() == 35);
  CHECK(right.size() == 35);
}

TEST_CASE("declared 1-to-1 relations have unit head counts") {
  SynthSpec spec;
  spec.entities = 60;
  spec.relations = 8;
  spec.one_to_one_fraction = 0.5;
  spec.dropout = 0.0;
  spec.rng_seed = 21;
  Dataset ds = generate_synthetic_pair(spec);

  // Per relation of g1, the max head count over tails.
  auto max_heads = [&](const KnowledgeGraph& kg, int rel) {
    std::map<int, std::set<int>> heads;
    for (const Triple& t : kg.triples)
      if (t.rel == rel) heads[t.tail].insert(t.head);
    std::size_t best = 0;
    for (auto& [tail, hs] : heads) best = std::max(best, hs.size());
    return best;
  };

  int one_to_one = 0;
  for (int r = 0; r < spec.relations; ++r)
    if (max_heads(ds.pair.g1, r) == 1) ++one_to_one;
  CHECK(one_to_one == 4);  // round(0.5 * 8)

  // The rest stay within the configured head-count band.
  for (int r = 0; r < spec.relations; ++r) {
    std::size_t m = max_heads(ds.pair.g1, r);
    CHECK(m >= 1);
    CHECK(m <= static_cast<std::size_t>(spec.n_max));
  }
}

TEST_CASE("dropout removes roughly the configured share of triples") {
  SynthSpec base;
  base.entities = 400;
  base.relations = 10;
  base.dropout = 0.0;
  base.rng_seed = 33;
  std::size_t full = generate_synthetic_pair(base).pair.g1.triples.size();

  SynthSpec dropped = base;
  dropped.dropout = 0.1;
  Dataset ds = generate_synthetic_pair(dropped);
  double kept1 = static_cast<double>(ds.pair.g1.triples.size()) / full;
  double kept2 = static_cast<double>(ds.pair.g2.triples.size()) / full;
  // ~2400 Bernoulli(0.9) draws per view: 4 sigma is about 2.5 points.
  CHECK(kept1 == doctest::Approx(0.9).epsilon(0.035));
  CHECK(kept2 == doctest::Approx(0.9).epsilon(0.035));

  // The two views drop independently, so their kept sets differ.
  std::vector<int> ent_map(dropped.entities, -1), rel_map(dropped.relations, -1);
  for (auto [a, b] : ds.ref_entities) ent_map[a] = b;
  for (auto [a, b] : ds.ref_relations) rel_map[a] = b;
  std::set<std::tuple<int, int, int>> t1m, t2;
  for (const Triple& t : ds.pair.g1.triples)
    t1m.insert({ent_map[t.head], rel_map[t.rel], ent_map[t.tail]});
  for (const Triple& t : ds.pair.g2.triples) t2.insert({t.head, t.rel, t.tail});
  CHECK(t1m != t2);
}

TEST_CASE("seed split is deterministic, sized and disjoint") {
  std::vector<std::pair<int, int>> refs;
  for (int i = 0; i < 50; ++i) refs.emplace_back(i, i + 100);

  SeedAlignments s1 = split_seeds(refs, 0.3, 7);
  SeedAlignments s2 = split_seeds(refs, 0.3, 7);
  CHECK(s1.train == s2.train);
  CHECK(s1.test == s2.test);
  CHECK(s1.train.size() == 15);
  CHECK(s1.test.size() == 35);

  std::set<std::pair<int, int>> all(s1.train.begin(), s1.train.end());
  all.insert(s1.test.begin(), s1.test.end());
  CHECK(all.size() == 50);

  SeedAlignments s3 = split_seeds(refs, 0.3, 8);
  CHECK(s1.train != s3.train);

  CHECK_THROWS_AS(split_seeds(refs, 0.0, 7), std::runtime_error);
  CHECK_THROWS_AS(split_seeds(refs, 1.0, 7), std::runtime_error);
  std::vector<std::pair<int, int>> two = {{0, 0}, {1, 1}};
  CHECK_THROWS_AS(split_seeds(two, 0.01, 7), std::runtime_error);  // zero train pairs
}

}  // TEST_SUITE
