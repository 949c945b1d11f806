#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "rnm/eval.hpp"
#include "rnm/pipeline.hpp"

using namespace rnm;
using namespace testutil;

namespace {

DistanceState two_row_state() {
  DistanceState state;
  state.ent = {
      {{10, 1.0, 1.0}, {11, 2.0, 2.0}, {12, 3.0, 3.0}},
      {{10, 0.5, 0.5}, {11, 0.9, 0.9}, {12, 4.0, 4.0}},
  };
  return state;
}

RunConfig tiny_run_config() {
  RunConfig cfg;
  cfg.train.pretrain_epochs = 5;
  cfg.train.joint_epochs = 2;
  cfg.train.negatives = 8;
  cfg.train.neg_pool = 20;
  cfg.iter.max_iters = 2;
  cfg.eval_ks = {1, 5, 10};
  return cfg;
}

Dataset tiny_dataset(std::uint64_t rng_seed) {
  SynthSpec spec;
  spec.entities = 80;
  spec.relations = 4;
  spec.mean_degree = 4.0;
  spec.dropout = 0.05;
  spec.sigma = 0.05;
  spec.feature_dim = 8;
  spec.rng_seed = rng_seed;
  return generate_synthetic_pair(spec);
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("perfect predictions score hits 100 and mrr 1") {
  RankingReport r = rank_entities(two_row_state(), {{0, 10}, {1, 10}}, {1, 10});
  CHECK(r.task == "entity");
  CHECK(r.queries == 2);
  CHECK(r.missing == 0);
  CHECK(r.ranks == std::vector<int>{1, 1});
  CHECK(r.hits_at(1) == 100.0);
  CHECK(r.hits_at(10) == 100.0);
  CHECK(r.mrr == 1.0);
}

TEST_CASE("rank two halves the hits at one") {
  RankingReport r = rank_entities(two_row_state(), {{0, 10}, {1, 11}}, {1});
  CHECK(r.ranks == std::vector<int>{1, 2});
  CHECK(r.hits_at(1) == 50.0);
  CHECK(r.mrr == doctest::Approx(0.75));
  CHECK(r.summary() == "hits@1=50.00 mrr=0.750");
}

TEST_CASE("training seeds are never queried") {
  DistanceState state = two_row_state();
  state.seed_partner = {{0, 10}};
  RankingReport r = rank_entities(state, {{0, 10}, {1, 11}}, {1});
  CHECK(r.queries == 1);
  CHECK(r.ranks == std::vector<int>{2});

  CHECK_THROWS_WITH_AS(rank_entities(state, {{0, 10}}, {1}),
                       doctest::Contains("no usable queries"), std::runtime_error);
}

TEST_CASE("a target missing from the row ranks one past the end") {
  RankingReport r = rank_entities(two_row_state(), {{0, 99}}, {1, 10});
  CHECK(r.ranks == std::vector<int>{4});
  CHECK(r.missing == 1);
  CHECK(r.hits_at(1) == 0.0);
  CHECK(r.hits_at(10) == 100.0);  // rank 4 still lands inside k = 10
  CHECK(r.mrr == doctest::Approx(0.25));
}

TEST_CASE("degenerate inputs throw") {
  CHECK_THROWS_AS(rank_entities(two_row_state(), {}, {1}), std::invalid_argument);
  RankingReport r = rank_entities(two_row_state(), {{0, 10}}, {1});
  CHECK_THROWS_WITH_AS(r.hits_at(7), doctest::Contains("was not computed"),
                       std::invalid_argument);
}

TEST_CASE("ranking agrees with the full-sort oracle") {
  std::mt19937_64 rng(87);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int trial = 0; trial < 50; ++trial) {
    const int n1 = 3 + static_cast<int>(unit(rng) * 20);
    const int n2 = 3 + static_cast<int>(unit(rng) * 20);
    DistanceState state;
    state.ent.resize(n1);
    for (auto& row : state.ent) {
      for (int t = 0; t < n2; ++t)
        if (unit(rng) < 0.7) {
          double d = unit(rng) * 5.0;
          row.push_back({n1 + t, d, d});
        }
      std::sort(row.begin(), row.end(), [](const CandEntry& a, const CandEntry& b) {
        return a.dist < b.dist || (a.dist == b.dist && a.target < b.target);
      });
    }

    std::vector<std::pair<int, int>> truth;
    for (int i = 0; i < n1; ++i) truth.emplace_back(i, n1 + static_cast<int>(unit(rng) * n2));

    std::vector<int> ks = {1, 3, 5, 10};
    RankingReport r = rank_entities(state, truth, ks);
    REQUIRE(r.queries == n1);

    double mrr = 0.0;
    for (int i = 0; i < n1; ++i) {
      int want = oracle_rank(state.ent[i], truth[i].second);
      CHECK(r.ranks[i] == want);
      mrr += 1.0 / want;
    }
    CHECK(r.mrr == doctest::Approx(mrr / n1).epsilon(1e-12));

    for (std::size_t i = 1; i < ks.size(); ++i) CHECK(r.hits[i - 1] <= r.hits[i]);

    std::vector<std::pair<int, int>> shuffled = truth;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    RankingReport s = rank_entities(state, shuffled, ks);
    CHECK(s.mrr == doctest::Approx(r.mrr).epsilon(1e-12));
    CHECK(s.hits == r.hits);
  }
}

TEST_CASE("relation folding maps reverse ids onto forward ones") {
  GraphPair pair;
  pair.g1 = make_kg(2, 2, {{0, 0, 1}, {0, 1, 1}});
  pair.g2 = make_kg(2, 2, {{0, 0, 1}, {0, 1, 1}});
  pair = add_reverse_relations(pair);
  // g1 relations 0,1 forward, 2,3 reverse; g2 global 4,5 forward, 6,7 reverse.

  RelationFolding fold = RelationFolding::from_pair(pair, true);
  CHECK(fold.fold(0) == 0);
  CHECK(fold.fold(2) == 0);
  CHECK(fold.fold(3) == 1);
  CHECK(fold.fold(4) == 4);
  CHECK(fold.fold(6) == 4);
  CHECK(fold.fold(7) == 5);

  RelationFolding off = RelationFolding::from_pair(pair, false);
  for (int r : {0, 2, 3, 4, 6, 7}) CHECK(off.fold(r) == r);
}

TEST_CASE("relation ranking counts either orientation once") {
  GraphPair pair;
  pair.g1 = make_kg(2, 2, {{0, 0, 1}, {0, 1, 1}});
  pair.g2 = make_kg(2, 2, {{0, 0, 1}, {0, 1, 1}});
  pair = add_reverse_relations(pair);
  RelationFolding folding = RelationFolding::from_pair(pair, true);

  DistanceState state;
  // Candidates for relation 0: the reverse of its true partner first, then
  // the partner itself, then an unrelated forward relation.
  state.rel = {{{6, 0.1, 0.1}, {4, 0.2, 0.2}, {5, 0.3, 0.3}}};

  RankingReport hit = rank_relations(state, {{0, 4}}, {1}, folding);
  CHECK(hit.ranks == std::vector<int>{1});  // 6 folds onto 4
  CHECK(hit.task == "relation");

  RankingReport reverse_truth = rank_relations(state, {{0, 6}}, {1}, folding);
  CHECK(reverse_truth.ranks == std::vector<int>{1});

  // 6 and 4 collapse, so 5 sits at distinct position 2.
  RankingReport second = rank_relations(state, {{0, 5}}, {1}, folding);
  CHECK(second.ranks == std::vector<int>{2});

  RelationFolding off = RelationFolding::from_pair(pair, false);
  RankingReport raw = rank_relations(state, {{0, 4}}, {1}, off);
  CHECK(raw.ranks == std::vector<int>{2});

  DistanceState empty_row;
  empty_row.rel = {{}};
  RankingReport miss = rank_relations(empty_row, {{0, 4}}, {1}, folding);
  CHECK(miss.ranks == std::vector<int>{1});  // rank row-size + 1 on an empty row
  CHECK(miss.missing == 1);
}

TEST_CASE("report files are header plus one tab-separated row per report") {
  TempDir dir("eval_report");
  RankingReport a = rank_entities(two_row_state(), {{0, 10}, {1, 11}}, {1, 10});
  RankingReport b = a;
  b.task = "relation";
  b.variant = "-AP";

  const std::string path = dir.file("report.tsv");
  write_report_file(path, {a, b}, "synthetic", 0.3);

  std::ifstream in(path);
  std::string header, row1, row2, extra;
  REQUIRE(std::getline(in, header));
  REQUIRE(std::getline(in, row1));
  REQUIRE(std::getline(in, row2));
  CHECK_FALSE(std::getline(in, extra));

  CHECK(header == "task\tvariant\tdataset\tratio\thits@1\thits@10\tmrr\tqueries\tmissing");
  CHECK(row1 == "entity\tfull\tsynthetic\t0.30\t50.00\t100.00\t0.750\t2\t0");
  CHECK(row2.rfind("relation\t-AP\tsynthetic\t0.30", 0) == 0);
}

TEST_CASE("truth files resolve through the source-id tables") {
  TempDir dir("eval_truth");
  std::vector<long long> src1 = {100, 101, 102};
  std::vector<long long> src2 = {200, 201};

  const std::string path = dir.file("truth.tsv");
  write_file(path, "100\t200\n\n102\t201\n");
  auto truth = resolve_truth_file(path, src1, src2, 3, 2, 7);
  REQUIRE(truth.size() == 2);
  CHECK(truth[0] == std::pair<int, int>{0, 7});
  CHECK(truth[1] == std::pair<int, int>{2, 8});

  SUBCASE("unknown ids name the id and the line") {
    write_file(path, "100\t200\n999\t200\n");
    CHECK_THROWS_WITH_AS(resolve_truth_file(path, src1, src2, 3, 2, 0),
                         doctest::Contains("truth.tsv:2: unknown KG1 id 999"),
                         std::runtime_error);
    write_file(path, "100\t777\n");
    CHECK_THROWS_WITH_AS(resolve_truth_file(path, src1, src2, 3, 2, 0),
                         doctest::Contains("unknown KG2 id 777"), std::runtime_error);
  }
  SUBCASE("limits hide table entries past the forward range") {
    write_file(path, "100\t201\n");
    CHECK_THROWS_WITH_AS(resolve_truth_file(path, src1, src2, 3, 1, 0),
                         doctest::Contains("unknown KG2 id 201"), std::runtime_error);
  }
  SUBCASE("duplicate source ids resolve to the first occurrence") {
    std::vector<long long> folded = {100, 101, 100, 101};  // reverse twins share ids
    write_file(path, "100\t200\n");
    auto t = resolve_truth_file(path, folded, src2, 4, 2, 0);
    CHECK(t[0].first == 0);
  }
  SUBCASE("malformed lines and missing files") {
    write_file(path, "abc\n");
    CHECK_THROWS_WITH_AS(resolve_truth_file(path, src1, src2, 3, 2, 0),
                         doctest::Contains("expected two ids"), std::runtime_error);
    CHECK_THROWS_WITH_AS(resolve_truth_file(dir.file("gone.tsv"), src1, src2, 3, 2, 0),
                         doctest::Contains("cannot open"), std::runtime_error);
  }
}

TEST_CASE("the pipeline scores both tasks and logs per-iteration hits") {
  Dataset ds = tiny_dataset(21);
  RunConfig cfg = tiny_run_config();

  PipelineResult res = run_pipeline(ds, cfg);
  const PreparedData& prep = res.data;

  CHECK(prep.train_entities.size() + prep.test_entities.size() == ds.ref_entities.size());
  CHECK(prep.relation_truth.size() == ds.ref_relations.size());
  for (auto [r1, r2] : prep.relation_truth) {
    CHECK(r1 < prep.pair.g1.forward_relations);
    CHECK(r2 >= prep.pair.relation_offset());
    CHECK(r2 < prep.pair.relation_offset() + prep.pair.g2.forward_relations);
  }

  CHECK(res.outcome.entities.queries == static_cast<int>(prep.test_entities.size()));
  CHECK(res.outcome.entities.variant == "full");
  CHECK(res.outcome.has_relations);
  CHECK(res.outcome.relations.queries == static_cast<int>(prep.relation_truth.size()));

  REQUIRE(!res.outcome.iterations.empty());
  for (const IterationMetrics& m : res.outcome.iterations) {
    if (m.converged) continue;  // no fresh scores on the repeat round
    CHECK(m.ent_hits1 >= 0.0);
    CHECK(m.ent_hits1 <= 100.0);
    CHECK(m.rel_hits1 >= 0.0);
  }

  SUBCASE("repeat runs are bitwise deterministic") {
    PipelineResult again = run_pipeline(ds, cfg);
    CHECK(again.outcome.entities.ranks == res.outcome.entities.ranks);
    CHECK(again.outcome.entities.hits == res.outcome.entities.hits);
    CHECK(again.outcome.relations.mrr == res.outcome.relations.mrr);
    CHECK(same_matrix(again.emb.x, res.emb.x));
  }

  SUBCASE("the single-iteration ablation reproduces iteration one") {
    MatchOutcome one = run_ablation(Variant::NoIS, prep, res.emb, cfg);
    CHECK(one.entities.variant == "-IS");
    REQUIRE(one.iterations.size() == 1);
    CHECK(one.entities.hits_at(1) ==
          doctest::Approx(res.outcome.iterations[0].ent_hits1).epsilon(1e-12));
    CHECK(one.relations.hits_at(1) ==
          doctest::Approx(res.outcome.iterations[0].rel_hits1).epsilon(1e-12));
  }

  SUBCASE("ablation variants rescore the same embeddings") {
    for (Variant v : {Variant::NoAP, Variant::NoRM}) {
      MatchOutcome out = run_ablation(v, prep, res.emb, cfg);
      CHECK(out.entities.variant == to_string(v));
      CHECK(out.entities.queries == res.outcome.entities.queries);
      CHECK(out.entities.hits_at(1) >= 0.0);
    }
  }
}

TEST_CASE("the seed ratio sweep retrains per ratio") {
  Dataset ds = tiny_dataset(22);
  RunConfig cfg = tiny_run_config();

  auto sweep = seed_ratio_sweep({0.2, 0.4}, ds, cfg);
  REQUIRE(sweep.size() == 2);
  CHECK(sweep[0].first == 0.2);
  CHECK(sweep[1].first == 0.4);
  // More seeds leave fewer test queries.
  CHECK(sweep[0].second.entities.queries > sweep[1].second.entities.queries);
  for (auto& [ratio, out] : sweep) {
    CHECK(out.entities.queries > 0);
    CHECK(out.entities.hits_at(1) >= 0.0);
  }
}

}  // TEST_SUITE
